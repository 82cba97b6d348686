import { ApiClient } from "./api.js";
import type { StatusSink } from "./schemaTree.js";
import type { ExportStatus } from "./types.js";

/**
 * Export dialog: choose root documents, title, and an optional seed, then
 * watch the job until the package is ready. A fixed seed reproduces the
 * archive byte for byte.
 */
export class ExportPanel {
  private rootsEl: HTMLElement;
  private titleEl: HTMLInputElement;
  private seedEl: HTMLInputElement;
  private jobsEl: HTMLElement;
  private timer: ReturnType<typeof setInterval> | null = null;
  private watching: string[] = [];

  constructor(
    root: HTMLElement,
    private client: ApiClient,
    private collectionId: string,
    private status: StatusSink,
  ) {
    root.innerHTML = "";
    const form = document.createElement("div");
    form.className = "export-form";

    this.rootsEl = document.createElement("div");
    this.rootsEl.className = "roots";

    this.titleEl = document.createElement("input");
    this.titleEl.placeholder = "Package title";

    this.seedEl = document.createElement("input");
    this.seedEl.placeholder = "Seed (optional, for reproducible builds)";
    this.seedEl.type = "number";

    const start = document.createElement("button");
    start.textContent = "Build package";
    start.onclick = () => void this.start();

    form.append(this.rootsEl, this.titleEl, this.seedEl, start);
    this.jobsEl = document.createElement("div");
    this.jobsEl.className = "jobs";
    root.append(form, this.jobsEl);
  }

  async load(): Promise<void> {
    const docs = await this.client.documents(this.collectionId);
    this.rootsEl.innerHTML = "";
    for (const doc of docs) {
      const label = document.createElement("label");
      label.className = "root-choice";
      const box = document.createElement("input");
      box.type = "checkbox";
      box.value = doc.id;
      label.append(box, document.createTextNode(` ${doc.id} — ${doc.title}`));
      this.rootsEl.appendChild(label);
    }
  }

  dispose(): void {
    if (this.timer) clearInterval(this.timer);
    this.timer = null;
  }

  private selectedRoots(): string[] {
    return Array.from(this.rootsEl.querySelectorAll<HTMLInputElement>("input:checked")).map(
      (box) => box.value,
    );
  }

  private async start(): Promise<void> {
    const roots = this.selectedRoots();
    const title = this.titleEl.value.trim();
    if (!roots.length) {
      this.status("pick at least one root document", "err");
      return;
    }
    if (!title) {
      this.status("package title is required", "err");
      return;
    }
    const seedText = this.seedEl.value.trim();
    try {
      const job = await this.client.startExport(this.collectionId, {
        roots,
        title,
        seed: seedText ? parseInt(seedText, 10) : null,
      });
      this.watching.push(job.id);
      this.status(`export ${job.id} queued`, "ok");
      this.ensurePolling();
      await this.refresh();
    } catch (err) {
      this.status(err instanceof Error ? err.message : String(err), "err");
    }
  }

  private ensurePolling(): void {
    if (this.timer) return;
    this.timer = setInterval(() => void this.refresh(), 700);
  }

  private async refresh(): Promise<void> {
    const jobs: ExportStatus[] = [];
    for (const id of this.watching) {
      jobs.push(await this.client.exportStatus(id));
    }
    if (jobs.every((j) => j.status === "done" || j.status === "failed")) {
      this.dispose();
    }
    this.jobsEl.innerHTML = "";
    for (const job of jobs) {
      const row = document.createElement("div");
      row.className = `job job-${job.status}`;
      const text = document.createElement("span");
      text.textContent =
        `${job.id} · ${job.title} · ${job.status}` +
        (job.manifest_identifier ? ` · ${job.manifest_identifier}` : "") +
        (job.byte_size != null ? ` · ${job.byte_size} bytes` : "") +
        (job.error ? ` · ${job.error.code}: ${job.error.message}` : "");
      row.appendChild(text);
      if (job.status === "done") {
        const link = document.createElement("a");
        link.href = this.client.packageUrl(job.id);
        link.textContent = "download";
        link.setAttribute("download", "");
        row.appendChild(link);
      }
      this.jobsEl.appendChild(row);
    }
  }
}
