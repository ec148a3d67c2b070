/**
 * Results-store parsing: newline-delimited JSON, one header line then one
 * record per universe, exactly as the engine writes it.  The explorer never
 * recomputes statistics; everything downstream reads the parsed records.
 *
 * All failures throw StoreParseError carrying the 1-based line number so
 * the UI can point at the offending line.
 */

export const STORE_FORMAT = "forkgarden-store";
export const STORE_VERSION = 1;

export class StoreParseError extends Error {
  readonly line: number;

  constructor(line: number, message: string) {
    super(`line ${line}: ${message}`);
    this.name = "StoreParseError";
    this.line = line;
  }
}

export interface Decision {
  id: string;
  kind: string;
  values: string[];
}

export interface DvOutcome {
  status: string;
  bucket: string;
  [key: string]: unknown;
}

export interface UniverseRecord {
  universe_id: number;
  assignment: Record<string, string>;
  dvs: Record<string, DvOutcome>;
  study_bucket: string;
  match_count: number;
}

export interface StoreHeader {
  format: string;
  version: number;
  engine: string;
  alpha: number;
  spec_digest: string;
  dataset_digest: string;
  n_universes: number;
  dv_names: string[];
  decisions: Decision[];
  severity: string[];
  baseline: Record<string, unknown>;
}

export interface MultiverseModel {
  header: StoreHeader;
  records: UniverseRecord[];
  decisions: Decision[];
  dvNames: string[];
  /** Bucket names in severity order, from the header. */
  buckets: string[];
  byId: Map<number, UniverseRecord>;
}

function parseLine(line: number, raw: string): unknown {
  try {
    return JSON.parse(raw);
  } catch (e) {
    const what = line === 1 ? "bad header" : "bad record";
    throw new StoreParseError(line, `${what}: ${(e as Error).message}`);
  }
}

function checkHeader(doc: unknown): StoreHeader {
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new StoreParseError(1, `not a ${STORE_FORMAT} file`);
  }
  const h = doc as Record<string, unknown>;
  if (h.format !== STORE_FORMAT) {
    throw new StoreParseError(1, `not a ${STORE_FORMAT} file`);
  }
  if (h.version !== STORE_VERSION) {
    throw new StoreParseError(
      1,
      `unsupported store version ${JSON.stringify(h.version)}`,
    );
  }
  for (const field of ["n_universes", "dv_names", "decisions", "severity"]) {
    if (!(field in h)) {
      throw new StoreParseError(1, `header lacks ${field}`);
    }
  }
  const decisions = h.decisions as Decision[];
  if (
    !Array.isArray(decisions) ||
    decisions.some(
      (d) =>
        typeof d.id !== "string" ||
        typeof d.kind !== "string" ||
        !Array.isArray(d.values),
    )
  ) {
    throw new StoreParseError(1, "malformed decision table");
  }
  return h as unknown as StoreHeader;
}

function checkRecord(
  line: number,
  doc: unknown,
  decisions: Decision[],
  allowed: Map<string, Set<string>>,
): UniverseRecord {
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new StoreParseError(line, "record is not an object");
  }
  const r = doc as Record<string, unknown>;
  if (typeof r.universe_id !== "number") {
    throw new StoreParseError(line, "record has no universe_id");
  }
  if (typeof r.assignment !== "object" || r.assignment === null) {
    throw new StoreParseError(line, "record has no assignment");
  }
  const assignment = r.assignment as Record<string, string>;
  for (const d of decisions) {
    const v = assignment[d.id];
    if (v === undefined) {
      throw new StoreParseError(line, `assignment lacks decision ${d.id}`);
    }
    if (!allowed.get(d.id)!.has(v)) {
      throw new StoreParseError(
        line,
        `assignment value ${JSON.stringify(v)} not declared for ${d.id}`,
      );
    }
  }
  if (typeof r.study_bucket !== "string") {
    throw new StoreParseError(line, "record has no study_bucket");
  }
  if (typeof r.match_count !== "number") {
    throw new StoreParseError(line, "record has no match_count");
  }
  if (typeof r.dvs !== "object" || r.dvs === null) {
    throw new StoreParseError(line, "record has no dvs");
  }
  return r as unknown as UniverseRecord;
}

/**
 * Parsing core: yields the processed line count after every chunk so the
 * async wrapper can hand control back to the event loop between chunks.
 */
function* parseSteps(
  text: string,
  chunkLines: number,
): Generator<number, MultiverseModel> {
  const lines = text.split("\n");
  // The engine ends the file with a newline; drop the resulting empty tail.
  if (lines.length > 0 && lines[lines.length - 1] === "") {
    lines.pop();
  }
  if (lines.length === 0 || lines[0].trim() === "") {
    throw new StoreParseError(1, "missing store header");
  }
  const header = checkHeader(parseLine(1, lines[0]));
  const allowed = new Map<string, Set<string>>(
    header.decisions.map((d) => [d.id, new Set(d.values)]),
  );
  const records: UniverseRecord[] = [];
  const byId = new Map<number, UniverseRecord>();
  let prevId: number | null = null;
  for (let i = 1; i < lines.length; i++) {
    const lineNo = i + 1;
    if (lines[i].trim() === "") {
      throw new StoreParseError(lineNo, "blank line inside store");
    }
    const rec = checkRecord(
      lineNo,
      parseLine(lineNo, lines[i]),
      header.decisions,
      allowed,
    );
    if (prevId !== null && rec.universe_id <= prevId) {
      throw new StoreParseError(lineNo, "universe ids out of order");
    }
    prevId = rec.universe_id;
    records.push(rec);
    byId.set(rec.universe_id, rec);
    if (i % chunkLines === 0) {
      yield i;
    }
  }
  if (header.n_universes !== records.length) {
    throw new StoreParseError(
      1,
      `header promises ${header.n_universes} universes, file has ${records.length}`,
    );
  }
  return {
    header,
    records,
    decisions: header.decisions,
    dvNames: header.dv_names,
    buckets: header.severity,
    byId,
  };
}

/** Parse a store file's text into the explorer's in-memory model. */
export function parseStore(text: string): MultiverseModel {
  const steps = parseSteps(text, Number.MAX_SAFE_INTEGER);
  let step = steps.next();
  while (!step.done) {
    step = steps.next();
  }
  return step.value;
}

/**
 * Same parse, but yields to the event loop between chunks so a large
 * store does not freeze the page.  onProgress receives processed and
 * total line counts.
 */
export async function parseStoreAsync(
  text: string,
  chunkLines = 4096,
  onProgress?: (done: number, total: number) => void,
): Promise<MultiverseModel> {
  const total = text.split("\n").length;
  const steps = parseSteps(text, chunkLines);
  let step = steps.next();
  while (!step.done) {
    onProgress?.(step.value, total);
    await new Promise((resolve) => setTimeout(resolve, 0));
    step = steps.next();
  }
  return step.value;
}
