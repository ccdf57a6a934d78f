/** DOM wiring for the four panels: instance list, DAG, inspector, and the
 * diff/compare pane, plus the define/submit actions.
 *
 * Rule of the house: polling and click-throughs only read. The service is
 * written to from exactly three places, all of them explicit user actions:
 * publishing a definition, opening an instance, and saving an annotation.
 */

import { ApiError, ServiceClient } from "./client.js";
import type { InstancesSnapshot, Poller } from "./poller.js";
import { comparisonText, specValidationText } from "./difftext.js";
import { dagSvg } from "./svg.js";
import {
  STATE_COLORS,
  STATE_ORDER,
  dagView,
  formatBytes,
  instanceRows,
  payloadPreview,
} from "./viewmodel.js";
import type { OutcomeRow, Reconstruction } from "./types.js";

function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

interface Selection {
  instanceId: string | null;
  taskName: string | null;
  lastSeq: number | null; // of the reconstruction currently on screen
  recon: Reconstruction | null;
}

export class App {
  private sel: Selection = { instanceId: null, taskName: null, lastSeq: null, recon: null };

  constructor(
    private readonly doc: Document,
    private client: ServiceClient,
    private readonly poller: Poller,
  ) {}

  private el<T extends HTMLElement>(id: string): T {
    const node = this.doc.getElementById(id);
    if (!node) throw new Error(`missing #${id}`);
    return node as T;
  }

  mount(): void {
    this.renderLegend();
    this.el<HTMLInputElement>("service-url").value = this.client.base;
    this.poller.onUpdate((snap) => this.onSnapshot(snap));

    this.el("instances").addEventListener("click", (ev) => {
      const row = (ev.target as HTMLElement).closest("tr[data-instance]");
      const id = row?.getAttribute("data-instance");
      if (id) void this.select(id);
    });

    this.el("dag").addEventListener("click", (ev) => {
      const g = (ev.target as HTMLElement).closest("[data-task]");
      const task = g?.getAttribute("data-task");
      if (task) void this.selectTask(task);
    });

    this.el("define-form").addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.publish();
    });
    this.el("open-form").addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.open();
    });
    this.el("annotate-form").addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.saveAnnotation();
    });
    this.el("spec-form").addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.runSpecValidation();
    });
    this.el("compare-form").addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.runComparison();
    });

    this.poller.start();
  }

  // --- polling (reads only) ------------------------------------------------

  private onSnapshot(snap: InstancesSnapshot): void {
    this.el("banner").hidden = snap.connected;
    this.el("sync-note").textContent = snap.syncedAt
      ? `last sync ${new Date(snap.syncedAt).toLocaleTimeString()}`
      : "never synced";

    const rows = instanceRows(snap.instances);
    const body = rows
      .map((r) => {
        const mark = r.instanceId === this.sel.instanceId ? ' class="selected"' : "";
        const pct = Math.round(r.fraction * 100);
        return (
          `<tr data-instance="${esc(r.instanceId)}"${mark}>` +
          `<td>${esc(r.instanceId)}</td><td>${esc(r.definition)}</td>` +
          `<td class="st-${r.status}">${r.status}</td>` +
          `<td>${r.done}/${r.total} (${pct}%)</td></tr>`
        );
      })
      .join("");
    this.el("instances-body").innerHTML =
      body || '<tr><td colspan="4">(no instances)</td></tr>';

    // keep the open DAG current; only refetch when the journal moved
    const selected = snap.instances.find((s) => s.instanceId === this.sel.instanceId);
    if (selected && selected.lastSeq !== this.sel.lastSeq) {
      void this.select(selected.instanceId);
    }
  }

  private async select(instanceId: string): Promise<void> {
    try {
      const recon = await this.client.reconstruct(instanceId);
      this.sel.instanceId = instanceId;
      this.sel.recon = recon;
      this.sel.lastSeq = recon.instance.lastSeq;
      if (this.sel.taskName && !(this.sel.taskName in recon.instance.activityStates)) {
        this.sel.taskName = null;
      }
      this.renderDag();
      if (this.sel.taskName) await this.selectTask(this.sel.taskName);
      else this.el("inspector").innerHTML = "<p>pick a node to inspect its outcomes</p>";
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        this.el("dag-title").textContent = "workflow";
        this.el("dag").innerHTML = `<p class="missing">instance ${esc(instanceId)} not found</p>`;
      } else {
        this.el("dag").innerHTML = `<p class="missing">${esc(String(err))}</p>`;
      }
    }
  }

  private renderDag(): void {
    const recon = this.sel.recon;
    if (!recon) return;
    const view = dagView(recon);
    this.el("dag-title").textContent =
      `${view.instanceId} · ${view.definition} · ${view.status}`;
    this.el("dag").innerHTML = dagSvg(view, this.sel.taskName ?? undefined);
  }

  private renderLegend(): void {
    this.el("legend").innerHTML = STATE_ORDER.map(
      (s) =>
        `<span class="chip"><i style="background:${STATE_COLORS[s]}"></i>${s}</span>`,
    ).join(" ");
  }

  private async selectTask(taskName: string): Promise<void> {
    const instanceId = this.sel.instanceId;
    if (!instanceId) return;
    this.sel.taskName = taskName;
    this.renderDag();

    const parts: string[] = [`<h3>${esc(taskName)}</h3>`];
    let rows: OutcomeRow[] = [];
    try {
      rows = await this.client.outcomes(instanceId, taskName);
    } catch (err) {
      parts.push(`<p class="missing">${esc(String(err))}</p>`);
    }
    if (!rows.length) parts.push("<p>(no outcomes yet)</p>");
    for (const { event, outcome } of rows) {
      parts.push(
        `<div class="outcome"><b>${outcome.kind}</b> at seq ${event.seq}, ` +
          `${esc(formatBytes(outcome.sizeBytes))}<br>` +
          `<code>${esc(outcome.outcomeId.slice(0, 16))}…</code></div>`,
      );
    }
    const last = rows[rows.length - 1];
    if (last) {
      try {
        const payload = await this.client.outcomePayload(last.outcome.outcomeId);
        const preview = payloadPreview(last.outcome.kind, payload);
        parts.push(`<pre class="preview">${esc(preview.join("\n"))}</pre>`);
      } catch (err) {
        parts.push(`<p class="missing">payload: ${esc(String(err))}</p>`);
      }
    }
    this.el("inspector").innerHTML = parts.join("\n");
    this.el<HTMLInputElement>("ann-target").value = instanceId;
    await this.refreshAnnotations(instanceId);
  }

  private async refreshAnnotations(target: string): Promise<void> {
    try {
      const notes = await this.client.annotations({ target });
      this.el("annotations").innerHTML = notes.length
        ? notes
            .map(
              (n) =>
                `<li><b>${esc(n.key)}</b>: ${esc(n.text)}` +
                (n.author ? ` <i>(${esc(n.author)})</i>` : "") +
                `</li>`,
            )
            .join("")
        : "<li>(none)</li>";
    } catch {
      this.el("annotations").innerHTML = "<li>(unavailable)</li>";
    }
  }

  // --- user actions (the only writes) ---------------------------------------

  private async publish(): Promise<void> {
    const out = this.el("define-out");
    try {
      const doc = JSON.parse(this.el<HTMLTextAreaElement>("doc").value) as unknown;
      const revise = this.el<HTMLInputElement>("revise").checked;
      const reply = await this.client.defineTemplate(doc, revise);
      out.textContent = `published ${reply.name}@${reply.version}`;
    } catch (err) {
      out.textContent = String(err);
    }
  }

  private async open(): Promise<void> {
    const out = this.el("open-out");
    try {
      const ref = this.el<HTMLInputElement>("open-name").value.trim();
      const [name, versionText] = ref.split("@", 2) as [string, string?];
      const inputsText = this.el<HTMLInputElement>("open-inputs").value.trim();
      const inputs: Record<string, string> = {};
      for (const pair of inputsText ? inputsText.split(",") : []) {
        const [k, v] = pair.split("=", 2);
        if (k && v !== undefined) inputs[k.trim()] = v.trim();
      }
      const reply = await this.client.openInstance({
        descriptionName: name,
        ...(versionText ? { version: Number(versionText) } : {}),
        inputs,
      });
      out.textContent = `opened ${reply.instance.instanceId}`;
      await this.poller.pollNow();
      await this.select(reply.instance.instanceId);
    } catch (err) {
      out.textContent = String(err);
    }
  }

  private async saveAnnotation(): Promise<void> {
    const out = this.el("annotate-out");
    try {
      const target = this.el<HTMLInputElement>("ann-target").value.trim();
      const key = this.el<HTMLInputElement>("ann-key").value.trim();
      const text = this.el<HTMLInputElement>("ann-text").value;
      const author = this.el<HTMLInputElement>("ann-author").value.trim();
      const reply = await this.client.annotate({ target, key, text, author });
      out.textContent = `saved ${reply.annotation.annotationId}`;
      await this.refreshAnnotations(target);
    } catch (err) {
      out.textContent = String(err);
    }
  }

  // --- diff / compare (reads) -----------------------------------------------

  private parseRef(text: string): { name: string; version?: number } {
    const [name, versionText] = text.trim().split("@", 2) as [string, string?];
    return versionText ? { name, version: Number(versionText) } : { name };
  }

  private async runSpecValidation(): Promise<void> {
    const out = this.el("spec-out");
    try {
      const body = await this.client.validateSpec({
        candidate: this.parseRef(this.el<HTMLInputElement>("spec-candidate").value),
        reference: this.parseRef(this.el<HTMLInputElement>("spec-reference").value),
      });
      out.textContent = specValidationText(body).join("\n");
    } catch (err) {
      out.textContent = String(err);
    }
  }

  private async runComparison(): Promise<void> {
    const out = this.el("compare-out");
    try {
      const body = await this.client.compareAnalyses(
        this.el<HTMLInputElement>("compare-a").value.trim(),
        this.el<HTMLInputElement>("compare-b").value.trim(),
      );
      out.textContent = comparisonText(body).join("\n");
    } catch (err) {
      out.textContent = String(err);
    }
  }
}
