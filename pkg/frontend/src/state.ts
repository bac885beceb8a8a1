export type ActiveView = "Keywords" | "Collect" | "EmbedMap" | "Probe";

export interface ViewState {
  activeView: ActiveView;
  selectedRun: string | null;
  pendingJob: string | null;
}

export function initialState(): ViewState {
  return { activeView: "Keywords", selectedRun: null, pendingJob: null };
}

export type StateEvent =
  | { kind: "switch_view"; view: ActiveView }
  | { kind: "select_run"; runId: string }
  | { kind: "job_started"; jobId: string }
  | { kind: "job_finished"; jobId: string }   // success or failure both clear
  | { kind: "job_failed"; jobId: string };

/** Pure transition function; pendingJob is cleared on completion or
 * failure, never left dangling. */
export function reduce(state: ViewState, event: StateEvent): ViewState {
  switch (event.kind) {
    case "switch_view":
      return { ...state, activeView: event.view };
    case "select_run":
      return { ...state, selectedRun: event.runId };
    case "job_started":
      return { ...state, pendingJob: event.jobId };
    case "job_finished":
    case "job_failed":
      return state.pendingJob === event.jobId
        ? { ...state, pendingJob: null }
        : state;
  }
}
