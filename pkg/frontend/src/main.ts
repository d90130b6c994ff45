/** Browser shell: binds real controls to the workbench controller.
 *
 * Everything DOM lives here; the controller, client, and renderers
 * are plain functions over data. The grid pane and the pattern pane
 * are exclusive, so each control change costs one query. The view
 * state mirrors into the address bar for shareable links.
 */

import { ApiClient } from "./api.js";
import { Workbench } from "./controls.js";
import { renderGrid } from "./grid.js";
import { DEFAULT_VIEW, fromQuery, toQuery, ViewState } from "./state.js";
import { renderPatterns } from "./tpartite.js";
import { CheckpointsDoc, GridDoc, Mode, PatternDoc, SchemaDoc } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, cls?: string, text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls !== undefined) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

function initialState(): ViewState {
  try {
    return fromQuery(window.location.search);
  } catch {
    return { ...DEFAULT_VIEW };
  }
}

class PanZoom {
  private scale = 1;
  private tx = 0;
  private ty = 0;
  private dragging = false;
  private lastX = 0;
  private lastY = 0;

  constructor(private readonly inner: HTMLElement, outer: HTMLElement) {
    outer.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      const factor = ev.deltaY < 0 ? 1.15 : 1 / 1.15;
      this.scale = Math.min(Math.max(this.scale * factor, 0.2), 8);
      this.apply();
    }, { passive: false });
    outer.addEventListener("pointerdown", (ev) => {
      this.dragging = true;
      this.lastX = ev.clientX;
      this.lastY = ev.clientY;
    });
    window.addEventListener("pointermove", (ev) => {
      if (!this.dragging) return;
      this.tx += ev.clientX - this.lastX;
      this.ty += ev.clientY - this.lastY;
      this.lastX = ev.clientX;
      this.lastY = ev.clientY;
      this.apply();
    });
    window.addEventListener("pointerup", () => {
      this.dragging = false;
    });
  }

  reset(): void {
    this.scale = 1;
    this.tx = 0;
    this.ty = 0;
    this.apply();
  }

  private apply(): void {
    this.inner.style.transform =
      `translate(${this.tx}px, ${this.ty}px) scale(${this.scale})`;
    this.inner.style.transformOrigin = "0 0";
  }
}

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (root === null) throw new Error("missing #app container");

  const api = new ApiClient("");
  let schema: SchemaDoc;
  let checkpoints: CheckpointsDoc;
  try {
    schema = await api.schema();
    checkpoints = await api.checkpoints();
  } catch (err) {
    root.textContent =
      `server unreachable: ${err instanceof Error ? err.message : String(err)}`;
    return;
  }

  const controls = el("div", "controls");
  const viewPane = el("div", "view");
  const stage = el("div", "stage");
  viewPane.appendChild(stage);
  const toastBox = el("div", "toast hidden");
  const bannerBox = el("div", "banner hidden");
  root.append(bannerBox, controls, viewPane, toastBox);
  const zoom = new PanZoom(stage, viewPane);

  const sinks = {
    grid(doc: GridDoc): void {
      stage.innerHTML = renderGrid(doc);
      backBtn.disabled = true;
      swapBtn.disabled = true;
      wireGridClicks();
    },
    patterns(doc: PatternDoc): void {
      stage.innerHTML = renderPatterns(doc, schema.attributes);
      backBtn.disabled = false;
      swapBtn.disabled = doc.variant !== "combined";
    },
    toast(message: string, retry: () => Promise<void>): void {
      toastBox.textContent = "";
      toastBox.classList.remove("hidden");
      toastBox.appendChild(el("span", undefined, message));
      const btn = el("button", undefined, "retry");
      btn.addEventListener("click", () => {
        toastBox.classList.add("hidden");
        void retry();
      });
      toastBox.appendChild(btn);
    },
    banner(message: string): void {
      bannerBox.textContent = `cannot render this server's responses: ${message}`;
      bannerBox.classList.remove("hidden");
    },
  };

  const bench = new Workbench(api, sinks, initialState());

  const syncUrl = (): void => {
    const q = toQuery(bench.state);
    window.history.replaceState(null, "", q === "" ? window.location.pathname : `?${q}`);
  };
  const go = (action: () => Promise<void>): void => {
    toastBox.classList.add("hidden");
    void action().then(syncUrl);
  };

  // attention band, dual handles
  const bandRow = el("div", "row");
  bandRow.appendChild(el("label", undefined, "attention band"));
  const loIn = el("input");
  const hiIn = el("input");
  for (const [input, value] of [[loIn, bench.state.attLo], [hiIn, bench.state.attHi]] as const) {
    input.type = "range";
    input.min = "0";
    input.max = "1";
    input.step = "0.05";
    input.value = String(value);
  }
  const bandLabel = el("span", "value");
  const bandText = (): void => {
    bandLabel.textContent = `[${loIn.value}, ${hiIn.value}]`;
  };
  bandText();
  const onBand = (moved: "lo" | "hi") => (): void => {
    // a handle pushed past its sibling drags the sibling along
    let lo = Number(loIn.value);
    let hi = Number(hiIn.value);
    if (lo > hi) {
      if (moved === "lo") hi = lo;
      else lo = hi;
      loIn.value = String(lo);
      hiIn.value = String(hi);
    }
    bandText();
    go(() => bench.setAttentionBand(lo, hi));
  };
  loIn.addEventListener("change", onBand("lo"));
  hiIn.addEventListener("change", onBand("hi"));
  bandRow.append(loIn, hiIn, bandLabel);

  // timestep range
  const timeRow = el("div", "row");
  timeRow.appendChild(el("label", undefined, "timesteps"));
  const t0In = el("input");
  const t1In = el("input");
  for (const [input, value] of [[t0In, bench.state.t0], [t1In, bench.state.t1]] as const) {
    input.type = "number";
    input.min = "1";
    input.max = String(schema.t_max);
    input.value = value === null ? "" : String(value);
  }
  const onTime = (): void => {
    const t0 = t0In.value === "" ? null : Number(t0In.value);
    const t1 = t1In.value === "" ? null : Number(t1In.value);
    if (t0 !== null && t1 !== null && t0 > t1) return;
    go(() => bench.setTimeRange(t0, t1));
  };
  t0In.addEventListener("change", onTime);
  t1In.addEventListener("change", onTime);
  timeRow.append(t0In, el("span", undefined, ".."), t1In);

  // attribute list: checkboxes, drag to reorder
  const attrRow = el("div", "row attrs");
  attrRow.appendChild(el("label", undefined, "attributes"));
  const list = el("ul");
  const order = bench.state.attrs.length > 0
    ? [...bench.state.attrs]
    : schema.attributes.map((a) => a.name);
  const checked = new Set(order);
  const pushAttrs = (): void => {
    const names = order.filter((name) => checked.has(name));
    go(() => bench.setAttributes(names));
  };
  let dragged: string | null = null;
  for (const name of order) {
    const item = el("li");
    item.draggable = true;
    const box = el("input");
    box.type = "checkbox";
    box.checked = true;
    box.addEventListener("change", () => {
      if (box.checked) checked.add(name);
      else checked.delete(name);
      pushAttrs();
    });
    item.append(box, el("span", undefined, name));
    item.addEventListener("dragstart", () => {
      dragged = name;
    });
    item.addEventListener("dragover", (ev) => ev.preventDefault());
    item.addEventListener("drop", (ev) => {
      ev.preventDefault();
      if (dragged === null || dragged === name) return;
      order.splice(order.indexOf(dragged), 1);
      order.splice(order.indexOf(name), 0, dragged);
      dragged = null;
      rebuildList();
      pushAttrs();
    });
    list.appendChild(item);
  }
  const rebuildList = (): void => {
    const items = [...list.children] as HTMLElement[];
    items.sort((a, b) =>
      order.indexOf(a.innerText.trim()) - order.indexOf(b.innerText.trim()));
    items.forEach((item) => list.appendChild(item));
  };
  attrRow.appendChild(list);

  // mode
  const modeRow = el("div", "row");
  modeRow.appendChild(el("label", undefined, "mode"));
  const modeSel = el("select");
  for (const m of ["both", "pos", "neg", "diff"]) {
    const opt = el("option", undefined, m);
    opt.value = m;
    modeSel.appendChild(opt);
  }
  modeSel.value = bench.state.mode;
  modeSel.addEventListener("change", () => {
    go(() => bench.setMode(modeSel.value as Mode));
  });
  modeRow.appendChild(modeSel);

  // epoch scrubber
  const epochRow = el("div", "row");
  epochRow.appendChild(el("label", undefined, "epoch"));
  const epochs = checkpoints.checkpoints.map((c) => c.epoch);
  const scrub = el("input");
  scrub.type = "range";
  scrub.min = "0";
  scrub.max = String(Math.max(epochs.length - 1, 0));
  scrub.step = "1";
  scrub.value = String(
    bench.state.epoch === null ? epochs.length - 1 : epochs.indexOf(bench.state.epoch));
  const epochLabel = el("span", "value",
    String(bench.state.epoch ?? epochs[epochs.length - 1] ?? ""));
  scrub.addEventListener("change", () => {
    const epoch = epochs[Number(scrub.value)];
    epochLabel.textContent = String(epoch);
    go(() => bench.setEpoch(epoch));
  });
  epochRow.append(scrub, epochLabel);

  // drill-down controls
  const navRow = el("div", "row");
  const backBtn = el("button", undefined, "back to grid");
  backBtn.disabled = true;
  backBtn.addEventListener("click", () => go(() => bench.closePair()));
  const swapBtn = el("button", undefined, "swap axes");
  swapBtn.disabled = true;
  swapBtn.addEventListener("click", () => go(() => bench.swapPair()));
  const fitBtn = el("button", undefined, "reset view");
  fitBtn.addEventListener("click", () => zoom.reset());
  navRow.append(backBtn, swapBtn, fitBtn);

  controls.append(bandRow, timeRow, attrRow, modeRow, epochRow, navRow);

  const wireGridClicks = (): void => {
    for (const block of stage.querySelectorAll<SVGGElement>("g.block")) {
      block.addEventListener("click", () => {
        const p = block.dataset.attrP;
        const q = block.dataset.attrQ;
        if (p === undefined || q === undefined) return;
        go(() => (p === q ? bench.openSingle(p) : bench.openPair(p, q)));
      });
    }
  };

  go(() => bench.refresh());
}

void boot();
