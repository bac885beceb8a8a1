import { api } from "../api";
import { clear, errorBanner, h } from "../dom";
import { keywordRows, sparklinePoints } from "../viewmodel";

const SVG_NS = "http://www.w3.org/2000/svg";

function sparkline(values: number[]): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("width", "120");
  svg.setAttribute("height", "28");
  svg.setAttribute("class", "spark");
  const line = document.createElementNS(SVG_NS, "polyline");
  line.setAttribute("points", sparklinePoints(values));
  line.setAttribute("fill", "none");
  line.setAttribute("stroke", "#4269d0");
  line.setAttribute("stroke-width", "1.5");
  svg.append(line);
  return svg;
}

export function keywordWorkbench(root: HTMLElement): void {
  const topicInput = h("input", {
    type: "text", class: "wide",
    placeholder: "Here's a short list of exotic pets",
  });
  const samplesInput = h("input", { type: "number", value: "1", min: "1" });
  const suggestButton = h("button", {}, "Suggest");
  const candidateList = h("div", { class: "candidates" });
  const fromInput = h("input", { type: "date", value: "2022-12-17" });
  const toInput = h("input", { type: "date", value: "2022-12-27" });
  const validateButton = h("button", { disabled: true }, "Validate");
  const results = h("div", {});
  const status = h("div", { class: "status" });

  let candidates: string[] = [];

  function renderCandidates() {
    clear(candidateList);
    candidates.forEach((surface, index) => {
      candidateList.append(
        h("span", { class: "chip" }, surface,
          h("button", {
            class: "chip-remove", title: "remove before validating",
            onclick: () => {
              candidates = candidates.filter((_, i) => i !== index);
              renderCandidates();
            },
          }, "x")));
    });
    validateButton.disabled = candidates.length === 0;
  }

  suggestButton.addEventListener("click", async () => {
    clear(status);
    try {
      const body = await api.suggest(
        topicInput.value, Number(samplesInput.value) || 1);
      candidates = body.candidates.map((c) => c.surface);
      renderCandidates();
      if (body.unparsed_completions > 0) {
        status.append(errorBanner(
          `${body.unparsed_completions} completion(s) yielded no keywords`));
      }
    } catch (err) {
      status.append(errorBanner(String(err)));
    }
  });

  validateButton.addEventListener("click", async () => {
    clear(status);
    clear(results);
    try {
      const body = await api.validate(
        candidates, fromInput.value, toInput.value);
      const rows = keywordRows(body);
      const table = h("table", { class: "trend-table" },
        h("thead", {}, h("tr", {},
          h("th", {}, "keyword"), h("th", {}, "trend"),
          h("th", {}, "total"), h("th", {}, "context"))));
      const tbody = h("tbody", {});
      for (const row of rows) {
        const links = h("td", { class: "context-links" });
        row.contextUrls.forEach(([day, url]) => {
          links.append(h("a", { href: url, target: "_blank", rel: "noopener" },
                         day.slice(8)), " ");
        });
        tbody.append(h("tr", { class: row.weak ? "weak" : "" },
          h("td", {}, row.keyword + (row.weak ? " (no usage)" : "")),
          h("td", {}, sparkline(row.spark)),
          h("td", { class: "num" }, row.totalDisplay),
          links));
      }
      table.append(tbody);
      results.append(table);
    } catch (err) {
      status.append(errorBanner(String(err)));
    }
  });

  root.append(
    h("section", {},
      h("h2", {}, "Keyword workbench"),
      h("div", { class: "row" },
        h("label", {}, "Topic ", topicInput),
        h("label", {}, "Samples ", samplesInput),
        suggestButton),
      candidateList,
      h("div", { class: "row" },
        h("label", {}, "From ", fromInput),
        h("label", {}, "To ", toInput),
        validateButton),
      status,
      results));
}
