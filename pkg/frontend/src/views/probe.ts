import { api } from "../api";
import { clear, errorBanner, h } from "../dom";
import { pollJob } from "../jobs";
import { probeTable } from "../viewmodel";

export function probeConsole(root: HTMLElement,
                             onJobChange: (jobId: string | null) => void): void {
  const probesInput = h("input", {
    type: "text", class: "wide",
    placeholder: "Ivermectin, Paxlovid",
  });
  const samplesInput = h("input", { type: "number", value: "50", min: "1" });
  const temperatureInput = h("input", { type: "number", value: "0.7", step: "0.1" });
  const topPInput = h("input", { type: "number", value: "1.0", step: "0.05" });
  const maxTokensInput = h("input", { type: "number", value: "256", min: "1" });
  const thresholdInput = h("input", { type: "number", value: "5", step: "0.5" });
  const runButton = h("button", { disabled: true }, "Run probes");
  const status = h("div", { class: "status" });
  const output = h("div", {});

  probesInput.addEventListener("input", () => {
    const hasProbe = probesInput.value.split(",").some((p) => p.trim());
    runButton.disabled = !hasProbe;  // empty probe input disables submit
  });

  runButton.addEventListener("click", async () => {
    clear(status);
    clear(output);
    runButton.disabled = true;
    const runId = `ui-${Date.now().toString(36)}`;
    try {
      const { job_id } = await api.runProbes({
        probes: probesInput.value,
        samples: Number(samplesInput.value),
        temperature: Number(temperatureInput.value),
        top_p: Number(topPInput.value),
        max_tokens: Number(maxTokensInput.value),
        run_id: runId,
      });
      onJobChange(job_id);
      status.append(h("p", {}, `probe job ${job_id} running...`));
      await pollJob(job_id, api.job);
      const report = await api.probeReport(runId, Number(thresholdInput.value));
      clear(status);
      renderReport(report);
    } catch (err) {
      status.append(errorBanner(String(err)));
    } finally {
      onJobChange(null);
      runButton.disabled = false;
    }
  });

  function renderReport(report: Parameters<typeof probeTable>[0]) {
    const model = probeTable(report);
    if (model.unreliable) {
      output.append(h("div", { class: "error-banner" },
        "unreliable: more than half of the generations failed to parse"));
    }
    const table = h("table", { class: "deviation-table" },
      h("thead", {}, h("tr", {},
        h("th", {}, "tag"), h("th", {}, "count"), h("th", {}, "expected"),
        h("th", {}, "observed"), h("th", {}, "deviation"))),
      h("tbody", {},
        ...model.rows.map((row) => h("tr", {},
          h("td", {}, row.tag),
          h("td", { class: "num" }, String(row.count)),
          h("td", { class: "num" }, row.expected),
          h("td", { class: "num" }, row.observed),
          h("td", { class: "num" }, row.deviation)))));
    output.append(
      table,
      h("p", {},
        `max |deviation| ${model.maxDeviation} at threshold ${model.threshold} `,
        h("span", { class: `badge ${model.badge.toLowerCase()}` }, model.badge)),
      h("p", { class: "muted" },
        `${model.total} generations, ${model.parseFailures} parse failures`));
  }

  root.append(h("section", {},
    h("h2", {}, "Probe console"),
    h("div", { class: "row" },
      h("label", {}, "Probes (comma-separated) ", probesInput)),
    h("div", { class: "row" },
      h("label", {}, "Samples/probe ", samplesInput),
      h("label", {}, "Temperature ", temperatureInput),
      h("label", {}, "top_p ", topPInput),
      h("label", {}, "Max tokens ", maxTokensInput),
      h("label", {}, "Threshold % ", thresholdInput),
      runButton),
    status,
    output));
}
