/** Control panel: algorithm selector, weight sliders, reset. */

import { Wire } from "./wire.js";

interface SliderSpec {
  id: string;
  label: string;
  min: number;
  max: number;
  step: number;
  value: number;
  /** Build the set_params payload fragment for a slider value. */
  payload: (v: number) => Record<string, unknown>;
}

const SLIDERS: SliderSpec[] = [
  {
    id: "c1", label: "c1 (position weight)", min: 1, max: 800, step: 1,
    value: 47.8, payload: (v) => ({ lqt: { c1: [v, v, v] } }),
  },
  {
    id: "c2", label: "c2 (velocity weight)", min: 0.002, max: 4, step: 0.002,
    value: 0.02, payload: (v) => ({ lqt: { c2: [v, v, v] } }),
  },
  {
    id: "c3", label: "c3 (acceleration weight)", min: 0, max: 0.5, step: 0.005,
    value: 0.01, payload: (v) => ({ lqt: { c3: v } }),
  },
  {
    id: "r", label: "R (jerk weight, log10)", min: -7, max: -2, step: 0.1,
    value: -5, payload: (v) => ({ lqt: { r_weight: Math.pow(10, v) } }),
  },
  {
    id: "k", label: "k (stiffness N/m)", min: 10, max: 800, step: 5,
    value: 200, payload: (v) => ({ vm: { k: v }, admittance: { k: v } }),
  },
  {
    id: "b", label: "b (damping N s/m)", min: 1, max: 80, step: 1,
    value: 15, payload: (v) => ({ vm: { b: v }, admittance: { b: v } }),
  },
];

export function buildPanel(
  root: HTMLElement,
  wire: Wire,
  onReset: () => void,
): void {
  const algoRow = document.createElement("div");
  algoRow.className = "row";
  for (const algo of ["gn", "lqt", "vm"] as const) {
    const btn = document.createElement("button");
    btn.textContent = algo.toUpperCase();
    btn.dataset.algo = algo;
    btn.onclick = () => {
      wire.request({ type: "select_algorithm", algorithm: algo });
      root.querySelectorAll("button[data-algo]").forEach((b) =>
        b.classList.toggle("active", b === btn),
      );
    };
    algoRow.appendChild(btn);
  }
  root.appendChild(algoRow);

  for (const spec of SLIDERS) {
    const row = document.createElement("div");
    row.className = "row";
    const label = document.createElement("label");
    label.textContent = spec.label;
    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = String(spec.min);
    slider.max = String(spec.max);
    slider.step = String(spec.step);
    slider.value = String(spec.value);
    slider.id = `slider-${spec.id}`;
    const readout = document.createElement("span");
    readout.textContent = slider.value;
    slider.oninput = () => {
      const v = Number(slider.value);
      readout.textContent =
        spec.id === "r" ? Math.pow(10, v).toExponential(1) : String(v);
      wire.request({ type: "set_params", ...spec.payload(v) });
    };
    row.append(label, slider, readout);
    root.appendChild(row);
  }

  const resetRow = document.createElement("div");
  resetRow.className = "row";
  const reset = document.createElement("button");
  reset.textContent = "Reset";
  reset.onclick = () => {
    wire.request({ type: "reset" });
    onReset();
  };
  resetRow.appendChild(reset);
  root.appendChild(resetRow);
}
