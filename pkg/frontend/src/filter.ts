/**
 * Filter state over a loaded store: per decision a subset of its declared
 * values, an include-fit-failures flag, and an optional highlighted
 * universe.  An empty subset is a legitimate state (the UI shows an
 * explicit empty-selection view), never an error; only *unknown* decision
 * ids or values are rejected, and at construction time.
 */

import type { MultiverseModel, UniverseRecord } from "./store";

export const FAILURE_BUCKET = "model-fit-failure";

export interface FilterState {
  /** decision id -> selected values; every declared decision has an entry. */
  selections: Map<string, Set<string>>;
  includeFitFailures: boolean;
  highlight: number | null;
}

/** Fresh state: everything selected, failures included, no highlight. */
export function initialFilterState(model: MultiverseModel): FilterState {
  return {
    selections: new Map(
      model.decisions.map((d) => [d.id, new Set(d.values)]),
    ),
    includeFitFailures: true,
    highlight: null,
  };
}

function declaredValues(model: MultiverseModel, decision: string): Set<string> {
  const d = model.decisions.find((x) => x.id === decision);
  if (d === undefined) {
    throw new Error(`unknown decision '${decision}'`);
  }
  return new Set(d.values);
}

/** New state with one decision's selection replaced (may be empty). */
export function withSelection(
  model: MultiverseModel,
  state: FilterState,
  decision: string,
  values: Iterable<string>,
): FilterState {
  const known = declaredValues(model, decision);
  const next = new Set<string>();
  const bad: string[] = [];
  for (const v of values) {
    if (known.has(v)) {
      next.add(v);
    } else {
      bad.push(v);
    }
  }
  if (bad.length > 0) {
    throw new Error(`unknown values for '${decision}': ${bad.sort().join(", ")}`);
  }
  const selections = new Map(state.selections);
  selections.set(decision, next);
  return { ...state, selections };
}

export function withFitFailures(
  state: FilterState,
  include: boolean,
): FilterState {
  return { ...state, includeFitFailures: include };
}

export function withHighlight(
  model: MultiverseModel,
  state: FilterState,
  universeId: number | null,
): FilterState {
  if (universeId !== null && !model.byId.has(universeId)) {
    throw new Error(`unknown universe ${universeId}`);
  }
  return { ...state, highlight: universeId };
}

/** True when some decision has nothing selected: the empty-selection view. */
export function isEmptySelection(state: FilterState): boolean {
  for (const values of state.selections.values()) {
    if (values.size === 0) {
      return true;
    }
  }
  return false;
}

/**
 * The records visible under a state: assignment inside the product of the
 * selected subsets, minus fit failures when excluded.  An empty result is
 * returned as an empty array, not an error.
 */
export function visibleRecords(
  model: MultiverseModel,
  state: FilterState,
): UniverseRecord[] {
  const out: UniverseRecord[] = [];
  outer: for (const rec of model.records) {
    for (const [decision, values] of state.selections) {
      if (!values.has(rec.assignment[decision])) {
        continue outer;
      }
    }
    if (!state.includeFitFailures && rec.study_bucket === FAILURE_BUCKET) {
      continue;
    }
    out.push(rec);
  }
  return out;
}
