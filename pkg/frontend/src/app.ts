import { AnnotatePanel } from "./annotate.js";
import { ApiClient, MutationQueue } from "./api.js";
import { DocumentsPanel } from "./documents.js";
import { ExportPanel } from "./exportDialog.js";
import { SchemaPanel, type StatusSink } from "./schemaTree.js";

// Shell: collection picker on top, one tool panel at a time below. The page
// holds no collection state beyond what the open panel fetched; switching
// panels or reloading always re-reads from the gateway.

type TabName = "schema" | "documents" | "annotate" | "export" | "validation";

const TABS: { name: TabName; label: string }[] = [
  { name: "schema", label: "Schema" },
  { name: "documents", label: "Documents" },
  { name: "annotate", label: "Annotate" },
  { name: "export", label: "Export" },
  { name: "validation", label: "Validation" },
];

class App {
  private client = new ApiClient("");
  private queue = new MutationQueue();
  private collectionId: string | null = null;
  private tab: TabName = "schema";
  private pickerEl!: HTMLSelectElement;
  private tabsEl!: HTMLElement;
  private panelEl!: HTMLElement;
  private statusEl!: HTMLElement;
  private activeExport: ExportPanel | null = null;

  constructor(private root: HTMLElement) {}

  async start(): Promise<void> {
    this.root.innerHTML = "";
    const bar = document.createElement("header");
    bar.className = "topbar";
    const title = document.createElement("strong");
    title.textContent = "recollect";
    this.pickerEl = document.createElement("select");
    this.pickerEl.onchange = () => {
      this.collectionId = this.pickerEl.value || null;
      void this.openTab(this.tab);
    };
    const newBtn = document.createElement("button");
    newBtn.textContent = "New collection";
    newBtn.onclick = () => void this.createCollection();
    const importBtn = document.createElement("button");
    importBtn.textContent = "Import...";
    importBtn.onclick = () => void this.runImport();
    bar.append(title, this.pickerEl, newBtn, importBtn);

    this.tabsEl = document.createElement("nav");
    this.tabsEl.className = "tabs";
    for (const tab of TABS) {
      const b = document.createElement("button");
      b.textContent = tab.label;
      b.dataset.tab = tab.name;
      b.onclick = () => void this.openTab(tab.name);
      this.tabsEl.appendChild(b);
    }

    this.panelEl = document.createElement("main");
    this.panelEl.className = "panel";
    this.statusEl = document.createElement("footer");
    this.statusEl.className = "status";
    this.root.append(bar, this.tabsEl, this.panelEl, this.statusEl);

    await this.refreshCollections();
    await this.openTab("schema");
  }

  private status: StatusSink = (text, kind = "ok") => {
    this.statusEl.textContent = text;
    this.statusEl.className = `status status-${kind}`;
  };

  private async refreshCollections(keep?: string): Promise<void> {
    const collections = await this.client.collections();
    this.pickerEl.innerHTML = "";
    for (const c of collections) {
      const option = document.createElement("option");
      option.value = c.id;
      option.textContent = `${c.id} (rev ${c.revision}, ${c.document_count} docs)`;
      this.pickerEl.appendChild(option);
    }
    const want = keep ?? this.collectionId;
    if (want && collections.some((c) => c.id === want)) {
      this.pickerEl.value = want;
    }
    this.collectionId = this.pickerEl.value || null;
  }

  private async createCollection(): Promise<void> {
    const name = window.prompt("Collection name");
    if (!name) return;
    try {
      const summary = await this.client.createCollection(name);
      await this.refreshCollections(summary.id);
      this.status(`created ${summary.id}`, "ok");
      await this.openTab("schema");
    } catch (err) {
      this.status(err instanceof Error ? err.message : String(err), "err");
    }
  }

  private async runImport(): Promise<void> {
    if (!this.collectionId) {
      this.status("create or pick a collection first", "err");
      return;
    }
    const plugins = await this.client.plugins();
    const plugin = window.prompt(
      `Plugin (${plugins.map((p) => p.name).join(", ")})`,
      plugins[0]?.name ?? "",
    );
    if (!plugin) return;
    const configText = window.prompt("Plugin config (JSON)", "{}");
    if (configText === null) return;
    let config: Record<string, unknown>;
    try {
      config = JSON.parse(configText);
    } catch {
      this.status("config is not valid JSON", "err");
      return;
    }
    try {
      const result = await this.queue.run(() =>
        this.client.runImport(this.collectionId!, plugin, config),
      );
      const r = result.report;
      this.status(
        `imported ${r.documents_imported} documents, ${r.resources_imported} resources`,
        "ok",
      );
      await this.refreshCollections();
      await this.openTab(this.tab);
    } catch (err) {
      this.status(err instanceof Error ? err.message : String(err), "err");
    }
  }

  private async openTab(tab: TabName): Promise<void> {
    this.tab = tab;
    for (const b of this.tabsEl.querySelectorAll("button")) {
      b.classList.toggle("active", b.dataset.tab === tab);
    }
    this.activeExport?.dispose();
    this.activeExport = null;
    this.panelEl.innerHTML = "";
    const cid = this.collectionId;
    if (!cid) {
      this.panelEl.textContent = "No collections yet. Create one and run an import.";
      return;
    }
    const onMutated = () => void this.refreshCollections();
    try {
      if (tab === "schema") {
        const panel = new SchemaPanel(this.panelEl, this.client, cid, this.queue, this.status, onMutated);
        await panel.load();
      } else if (tab === "documents") {
        const panel = new DocumentsPanel(this.panelEl, this.client, cid, this.queue, this.status, onMutated);
        await panel.load();
      } else if (tab === "annotate") {
        const panel = new AnnotatePanel(this.panelEl, this.client, cid, this.queue, this.status, onMutated);
        await panel.load();
      } else if (tab === "export") {
        this.activeExport = new ExportPanel(this.panelEl, this.client, cid, this.status);
        await this.activeExport.load();
      } else {
        await this.renderValidation(cid);
      }
    } catch (err) {
      this.status(err instanceof Error ? err.message : String(err), "err");
    }
  }

  private async renderValidation(cid: string): Promise<void> {
    const result = await this.client.validation(cid);
    const head = document.createElement("p");
    head.textContent = result.ok
      ? `revision ${result.revision}: collection is valid`
      : `revision ${result.revision}: ${result.violations.length} violations`;
    this.panelEl.appendChild(head);
    if (!result.ok) {
      const list = document.createElement("ul");
      for (const violation of result.violations) {
        const item = document.createElement("li");
        item.textContent =
          `${violation.code}: ${violation.message}` +
          (violation.document_id ? ` (document ${violation.document_id})` : "");
        list.appendChild(item);
      }
      this.panelEl.appendChild(list);
    }
  }
}

const rootEl = document.getElementById("app");
if (rootEl) {
  void new App(rootEl).start();
}
