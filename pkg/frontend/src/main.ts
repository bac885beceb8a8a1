import { clear, h } from "./dom";
import { ActiveView, initialState, reduce, ViewState } from "./state";
import { collectView } from "./views/collect";
import { embedMap } from "./views/embedmap";
import { keywordWorkbench } from "./views/keywords";
import { probeConsole } from "./views/probe";

const VIEWS: ActiveView[] = ["Keywords", "Collect", "EmbedMap", "Probe"];

let state: ViewState = initialState();

function dispatch(event: Parameters<typeof reduce>[1]) {
  state = reduce(state, event);
  render();
}

function jobTracker(view: ActiveView) {
  return (jobId: string | null) => {
    if (jobId) dispatch({ kind: "job_started", jobId });
    else if (state.pendingJob) {
      dispatch({ kind: "job_finished", jobId: state.pendingJob });
    }
  };
}

const content = h("main", {});
const tabs = h("nav", { class: "tabs" });

function render() {
  clear(tabs);
  for (const view of VIEWS) {
    tabs.append(h("button", {
      class: "tab" + (view === state.activeView ? " active" : ""),
      onclick: () => dispatch({ kind: "switch_view", view }),
    }, view));
  }
  clear(content);
  switch (state.activeView) {
    case "Keywords":
      keywordWorkbench(content);
      break;
    case "Collect":
      collectView(content, jobTracker("Collect"));
      break;
    case "EmbedMap":
      embedMap(content);
      break;
    case "Probe":
      probeConsole(content, jobTracker("Probe"));
      break;
  }
}

document.body.append(
  h("header", {}, h("h1", {}, "popscope"), tabs),
  content);
render();
