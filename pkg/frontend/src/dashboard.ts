import { Client, MetricsReport, SeriesPoint, TrendsPage } from "./api.js";
import { clear, el } from "./dom.js";

/** Read-only metrics view. Everything shown is re-fetched on refresh;
 * if the service is unreachable the whole panel is replaced by an
 * offline banner instead of stale numbers. */

function formatNumber(value: number | null, digits = 1): string {
  return value === null ? "n/a" : value.toFixed(digits);
}

function seriesSvg(doc: Document, series: SeriesPoint[]): Element {
  const width = 320;
  const height = 80;
  const svg = doc.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "series-chart");
  if (series.length === 0) {
    return svg;
  }
  const peak = Math.max(...series.map((p) => p.potential), 1);
  const step = series.length > 1 ? width / (series.length - 1) : 0;
  const scale = (value: number) => height - (value / peak) * (height - 4) - 2;
  for (const [field, cssClass] of [
    ["potential", "potential"],
    ["actual", "actual"],
  ] as const) {
    const line = doc.createElementNS("http://www.w3.org/2000/svg", "polyline");
    line.setAttribute("class", cssClass);
    line.setAttribute("fill", "none");
    line.setAttribute(
      "points",
      series.map((p, i) => `${(i * step).toFixed(1)},${scale(p[field]).toFixed(1)}`).join(" "),
    );
    svg.append(line);
  }
  return svg;
}

export class Dashboard {
  readonly root: HTMLElement;

  constructor(private readonly doc: Document, private readonly client: Client) {
    this.root = el(doc, "section", { class: "dashboard" });
  }

  async refresh(): Promise<void> {
    let report: MetricsReport;
    let trends: TrendsPage;
    try {
      report = await this.client.metricsReport();
      trends = await this.client.trends({ top: 10 });
    } catch {
      clear(this.root);
      this.root.append(
        el(this.doc, "div", { class: "offline-banner", role: "alert" }, [
          "Service unreachable. Showing nothing rather than stale numbers.",
        ]),
      );
      return;
    }
    this.render(report, trends);
  }

  private render(report: MetricsReport, trends: TrendsPage): void {
    clear(this.root);
    this.root.append(el(this.doc, "h2", {}, ["Dashboard"]));

    const last = report.cumulative_trends[report.cumulative_trends.length - 1];
    const unapproved = last ? last.actual : 0;
    const counters = el(this.doc, "div", { class: "counters" }, [
      this.counter("unapproved-claims", "Unapproved claims", String(unapproved)),
      this.counter("violations", "Violations found", String(report.counts.violations)),
      this.counter(
        "violations-per-hour",
        "Violations / hour",
        formatNumber(report.violations_per_hour),
      ),
      this.counter("median-delta", "Median debunk lead (days)", formatNumber(report.median_delta)),
      this.counter("flagged", "Flagged clusters", String(report.counts.flagged)),
      this.counter("reviews", "Reviews recorded", String(report.counts.reviews)),
    ]);
    this.root.append(counters);

    this.root.append(this.trendTable(trends));
    this.root.append(this.cumulativePanel(report.cumulative_trends));
    this.root.append(this.likertPanel(report.likert_distribution));
    this.root.append(this.deltaPanel(report.delta_days));
  }

  private counter(id: string, label: string, value: string): HTMLElement {
    return el(this.doc, "div", { class: "counter", "data-counter": id }, [
      el(this.doc, "span", { class: "value" }, [value]),
      el(this.doc, "span", { class: "label" }, [label]),
    ]);
  }

  private trendTable(trends: TrendsPage): HTMLElement {
    const table = el(this.doc, "table", { class: "trend-table" });
    const head = el(this.doc, "tr", {}, []);
    for (const column of ["rank", "claim", "today", "p", "z", "novel"]) {
      head.append(el(this.doc, "th", {}, [column]));
    }
    table.append(head);
    for (const record of trends.records) {
      table.append(
        el(this.doc, "tr", { "data-cluster": record.cluster_id }, [
          el(this.doc, "td", {}, [String(record.rank)]),
          el(this.doc, "td", { class: "canonical" }, [record.canonical]),
          el(this.doc, "td", {}, [String(record.a)]),
          el(this.doc, "td", {}, [record.p.toExponential(2)]),
          el(this.doc, "td", {}, [record.z.toFixed(2)]),
          el(this.doc, "td", {}, [record.novel ? "yes" : ""]),
        ]),
      );
    }
    return el(this.doc, "section", { class: "trends" }, [
      el(this.doc, "h3", {}, [trends.date ? `Top claims on ${trends.date}` : "No rolled-up days yet"]),
      table,
    ]);
  }

  private cumulativePanel(series: SeriesPoint[]): HTMLElement {
    const last = series[series.length - 1];
    return el(this.doc, "section", { class: "cumulative" }, [
      el(this.doc, "h3", {}, ["Cumulative trending claims"]),
      seriesSvg(this.doc, series),
      el(this.doc, "p", { class: "series-summary" }, [
        last ? `potential ${last.potential} / confirmed unapproved ${last.actual}` : "no flags yet",
      ]),
    ]);
  }

  private likertPanel(distribution: Record<string, number> | null): HTMLElement {
    const rows = el(this.doc, "div", { class: "likert-bars" });
    for (const score of ["1", "2", "3", "4", "5"]) {
      const share = distribution ? (distribution[score] ?? 0) : 0;
      const bar = el(this.doc, "div", { class: "bar", "data-score": score });
      bar.style.width = `${Math.round(share * 100)}%`;
      rows.append(
        el(this.doc, "div", { class: "likert-row", "data-score": score }, [
          el(this.doc, "span", { class: "score" }, [score]),
          bar,
          el(this.doc, "span", { class: "share" }, [`${(share * 100).toFixed(1)}%`]),
        ]),
      );
    }
    return el(this.doc, "section", { class: "likert" }, [
      el(this.doc, "h3", {}, ["Estimated Likert distribution"]),
      rows,
    ]);
  }

  private deltaPanel(deltas: Record<string, number>): HTMLElement {
    const list = el(this.doc, "ul", { class: "deltas" });
    for (const [clusterId, days] of Object.entries(deltas)) {
      list.append(
        el(this.doc, "li", { "data-cluster": clusterId }, [
          `${clusterId}: debunked ${days >= 0 ? `${days} days after` : `${-days} days before`} detection`,
        ]),
      );
    }
    return el(this.doc, "section", { class: "delta" }, [
      el(this.doc, "h3", {}, ["Detection lead over debunks"]),
      Object.keys(deltas).length > 0
        ? list
        : el(this.doc, "p", { class: "empty" }, ["No decided claims with debunk dates."]),
    ]);
  }
}
