/** SVG chart rendering. Every rendered value is copied verbatim from the
 * analyze response into data-* attributes so tests (and curious users) can
 * trace each mark back to a response field. */

import type { ScatterResponse, TimeseriesResponse } from "./api.js";

const WIDTH = 640;
const HEIGHT = 400;
const PAD = 48;
const SVG_NS = "http://www.w3.org/2000/svg";

const GROUP_COLORS = ["#2a7", "#d43", "#36b", "#b80", "#849", "#087"];

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, v);
  return el;
}

function makeScale(
  values: number[],
  outLo: number,
  outHi: number,
): (v: number) => number {
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const span = hi - lo || 1;
  return (v) => outLo + ((v - lo) / span) * (outHi - outLo);
}

export function renderTimeseries(payload: TimeseriesResponse): SVGSVGElement {
  const svg = svgEl("svg", {
    width: String(WIDTH),
    height: String(HEIGHT),
    "data-chart": "timeseries",
  });
  const series = payload.series;
  if (series.length === 0) return svg;

  const sx = makeScale(series.map((_, i) => i), PAD, WIDTH - PAD);
  const sy = makeScale(series.map((p) => p.value), HEIGHT - PAD, PAD);

  const path = series
    .map((p, i) => `${sx(i).toFixed(1)},${sy(p.value).toFixed(1)}`)
    .join(" ");
  svg.appendChild(
    svgEl("polyline", {
      points: path,
      fill: "none",
      stroke: GROUP_COLORS[0],
      "stroke-width": "2",
    }),
  );
  for (const [i, point] of series.entries()) {
    svg.appendChild(
      svgEl("circle", {
        cx: sx(i).toFixed(1),
        cy: sy(point.value).toFixed(1),
        r: "3",
        fill: GROUP_COLORS[0],
        "data-bucket-start": point.bucket_start,
        "data-value": String(point.value),
      }),
    );
  }
  return svg;
}

export function renderScatter(payload: ScatterResponse): SVGSVGElement {
  const svg = svgEl("svg", {
    width: String(WIDTH),
    height: String(HEIGHT),
    "data-chart": "scatter",
  });
  const labels = Object.keys(payload.groups).sort();
  const allPoints = labels.flatMap((l) => payload.groups[l].points);
  if (allPoints.length === 0) return svg;

  const sx = makeScale(allPoints.map((p) => p[0]), PAD, WIDTH - PAD);
  const sy = makeScale(allPoints.map((p) => p[1]), HEIGHT - PAD, PAD);

  for (const [idx, label] of labels.entries()) {
    const color = GROUP_COLORS[idx % GROUP_COLORS.length];
    const group = payload.groups[label];
    const g = svgEl("g", { "data-group": label });
    for (const [x, y] of group.points) {
      g.appendChild(
        svgEl("circle", {
          cx: sx(x).toFixed(1),
          cy: sy(y).toFixed(1),
          r: "3",
          fill: color,
          opacity: "0.7",
          "data-x": String(x),
          "data-y": String(y),
        }),
      );
    }
    if (group.fit) {
      const xs = group.points.map((p) => p[0]);
      const x0 = Math.min(...xs);
      const x1 = Math.max(...xs);
      g.appendChild(
        svgEl("line", {
          x1: sx(x0).toFixed(1),
          y1: sy(group.fit.slope * x0 + group.fit.intercept).toFixed(1),
          x2: sx(x1).toFixed(1),
          y2: sy(group.fit.slope * x1 + group.fit.intercept).toFixed(1),
          stroke: color,
          "stroke-dasharray": "4 2",
          "data-slope": String(group.fit.slope),
          "data-intercept": String(group.fit.intercept),
          "data-r2": String(group.fit.r2),
        }),
      );
    }
    // legend entry
    const legend = svgEl("text", {
      x: String(PAD),
      y: String(PAD + 14 * idx),
      fill: color,
      "font-size": "12",
      "data-legend": label,
    });
    legend.textContent = label;
    g.appendChild(legend);
    svg.appendChild(g);
  }
  return svg;
}
