import { api } from "../api";
import { clear, errorBanner, h } from "../dom";
import { pollJob } from "../jobs";
import type { JobResponse } from "../types";

export function collectView(root: HTMLElement,
                            onJobChange: (jobId: string | null) => void): void {
  const keywordsInput = h("textarea", {
    class: "wide", rows: "4",
    placeholder: "one keyword per line",
  });
  const fromInput = h("input", { type: "date", value: "2022-12-17" });
  const toInput = h("input", { type: "date", value: "2022-12-27" });
  const modeSelect = h("select", {},
    h("option", { value: "uniform" }, "uniform"),
    h("option", { value: "proportional" }, "proportional"));
  const dayCapInput = h("input", { type: "number", value: "8", min: "1" });
  const keywordCapInput = h("input", { type: "number", value: "60", min: "1" });
  const langInput = h("input", { type: "text", placeholder: "en" });
  const submitButton = h("button", {}, "Start collection");
  const progress = h("div", { class: "status" });

  submitButton.addEventListener("click", async () => {
    const keywords = keywordsInput.value.split("\n")
      .map((line) => line.trim()).filter(Boolean);
    clear(progress);
    if (keywords.length === 0) {
      progress.append(errorBanner("enter at least one keyword"));
      return;
    }
    const payload: Record<string, unknown> = {
      keywords,
      from: fromInput.value,
      to: toInput.value,
      mode: modeSelect.value,
      day_cap: Number(dayCapInput.value),
      keyword_cap: Number(keywordCapInput.value),
    };
    if (langInput.value.trim()) payload.lang = langInput.value.trim();
    submitButton.disabled = true;
    try {
      const { job_id } = await api.collect(payload);
      onJobChange(job_id);
      progress.append(h("p", {}, `job ${job_id} queued`));
      const job = await pollJob(job_id, api.job, (update: JobResponse) => {
        clear(progress);
        progress.append(h("p", {}, `job ${job_id}: ${update.status}`));
      });
      clear(progress);
      progress.append(
        h("p", {}, `done: ` + JSON.stringify(job.result)));
    } catch (err) {
      progress.append(errorBanner(String(err)));
    } finally {
      onJobChange(null);
      submitButton.disabled = false;
    }
  });

  root.append(h("section", {},
    h("h2", {}, "Collection"),
    h("div", { class: "row" }, h("label", {}, "Keywords"), keywordsInput),
    h("div", { class: "row" },
      h("label", {}, "From ", fromInput),
      h("label", {}, "To ", toInput),
      h("label", {}, "Mode ", modeSelect)),
    h("div", { class: "row" },
      h("label", {}, "Day cap ", dayCapInput),
      h("label", {}, "Keyword cap ", keywordCapInput),
      h("label", {}, "Language ", langInput),
      submitButton),
    progress));
}
