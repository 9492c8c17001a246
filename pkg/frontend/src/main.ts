/** Playground entry point: connect, wire the canvas, panel, and plots. */

import { Mailbox, RateLimiter } from "./mailbox.js";
import { buildPanel } from "./panel.js";
import { StripCharts } from "./plots.js";
import { FieldMsg, StateMsg, fromPlane } from "./protocol.js";
import { Scene, renderScene, viewportFromField } from "./render.js";
import { Viewport, canvasToPlane, clampToViewport } from "./view.js";
import { Wire, serviceUrl } from "./wire.js";

const MAX_POINTER_HZ = 120;

function boot(): void {
  const sceneCanvas = document.getElementById("scene") as HTMLCanvasElement;
  const plotCanvas = document.getElementById("plots") as HTMLCanvasElement;
  const panelRoot = document.getElementById("panel") as HTMLElement;
  const status = document.getElementById("status") as HTMLElement;
  const sceneCtx = sceneCanvas.getContext("2d")!;
  const plotCtx = plotCanvas.getContext("2d")!;

  let field: FieldMsg | null = null;
  let viewport: Viewport | null = null;
  const charts = new StripCharts();
  const stateBox = new Mailbox<StateMsg>();

  const wire = new Wire(serviceUrl(window.location.search), {
    onOpen: () => {
      status.textContent = "connected";
      wire.request({ type: "get_field", grid: 90, margin: 0.35 });
      wire.send({ type: "run", on: true });
      wire.send({ type: "set_mode", mode: "drag-ee" });
    },
    onClose: () => {
      status.textContent = "disconnected";
    },
    onState: (s) => {
      stateBox.put(s);
      charts.ingest(s);
    },
    onField: (f) => {
      field = f;     // cached client-side; recomputed only on request
      viewport = viewportFromField(f, sceneCanvas.width, sceneCanvas.height);
    },
    onError: (code, message) => {
      status.textContent = `error ${code}: ${message}`;
    },
  });
  wire.connect();

  buildPanel(panelRoot, wire, () => charts.clear());

  // pointer drags -> conflated input messages at a bounded rate
  const limiter = new RateLimiter<[number, number]>(
    1000 / MAX_POINTER_HZ,
    ([u, v]) => {
      if (!field) return;
      const x = fromPlane(u, v, field.origin, field.e1, field.e2);
      wire.send({ type: "input", x });
    },
  );
  let dragging = false;
  const pointerPlane = (ev: PointerEvent): [number, number] | null => {
    if (!viewport) return null;
    const rect = sceneCanvas.getBoundingClientRect();
    const [u, v] = canvasToPlane(
      ev.clientX - rect.left,
      ev.clientY - rect.top,
      viewport,
    );
    return clampToViewport(u, v, viewport);
  };
  sceneCanvas.addEventListener("pointerdown", (ev) => {
    dragging = true;
    sceneCanvas.setPointerCapture(ev.pointerId);
    const p = pointerPlane(ev);
    if (p) limiter.offer(p);
  });
  sceneCanvas.addEventListener("pointermove", (ev) => {
    if (!dragging) return;
    const p = pointerPlane(ev);
    if (p) limiter.offer(p);
  });
  const stopDrag = () => {
    dragging = false;    // release stops emission
  };
  sceneCanvas.addEventListener("pointerup", stopDrag);
  sceneCanvas.addEventListener("pointercancel", stopDrag);

  let latest: StateMsg | null = null;
  function frame(): void {
    limiter.flush();
    const fresh = stateBox.take();
    if (fresh) latest = fresh;
    const scene: Scene = {
      field,
      state: latest,
      viewport:
        viewport ?? {
          uMin: -1, uMax: 1, vMin: -1, vMax: 1,
          width: sceneCanvas.width, height: sceneCanvas.height,
        },
    };
    renderScene(sceneCtx, scene);
    charts.draw(plotCtx, plotCanvas.width, plotCanvas.height);
    if (latest) {
      const near = latest.is_eds_near ? " | NEAR SINGULARITY" : "";
      status.textContent =
        `connected | ${latest.algorithm} | t=${latest.t.toFixed(2)} s` + near;
    }
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);
}

boot();
