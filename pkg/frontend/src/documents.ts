import { ApiClient, ApiError, MutationQueue } from "./api.js";
import { textTargets, withTextReplaced } from "./paths.js";
import type { StatusSink } from "./schemaTree.js";
import type { DocumentPayload, SchemaElement } from "./types.js";

/**
 * Document browser: list on the left, editable descriptive values on the
 * right. Edits round-trip through PUT with the revision token; the server
 * migrates or rejects, never the client.
 */
export class DocumentsPanel {
  private listEl: HTMLElement;
  private editorEl: HTMLElement;
  private elements: SchemaElement[] = [];
  private revision = 0;
  private current: DocumentPayload | null = null;

  constructor(
    root: HTMLElement,
    private client: ApiClient,
    private collectionId: string,
    private queue: MutationQueue,
    private status: StatusSink,
    private onMutated: (revision: number) => void,
  ) {
    root.innerHTML = "";
    root.className = "split";
    this.listEl = document.createElement("div");
    this.listEl.className = "doc-list";
    this.editorEl = document.createElement("div");
    this.editorEl.className = "doc-editor";
    root.append(this.listEl, this.editorEl);
  }

  async load(): Promise<void> {
    const [schemaBody, docs] = await Promise.all([
      this.client.schema(this.collectionId),
      this.client.documents(this.collectionId),
    ]);
    this.elements = schemaBody.schema.elements;
    this.revision = schemaBody.revision;
    this.listEl.innerHTML = "";
    for (const doc of docs) {
      const row = document.createElement("div");
      row.className = "doc-row";
      row.textContent = `${doc.id} — ${doc.title}`;
      row.onclick = () => void this.open(doc.id);
      this.listEl.appendChild(row);
    }
    if (!docs.length) {
      this.listEl.textContent = "no documents";
    }
  }

  private async open(docId: string): Promise<void> {
    const body = await this.client.document(this.collectionId, docId);
    this.current = body.document;
    this.revision = body.revision;
    this.renderEditor();
  }

  private renderEditor(): void {
    const doc = this.current;
    this.editorEl.innerHTML = "";
    if (!doc) return;
    const h = document.createElement("h3");
    h.textContent = `${doc.id}: ${doc.title}`;
    this.editorEl.appendChild(h);

    for (const target of textTargets(doc, this.elements)) {
      const field = document.createElement("div");
      field.className = "field";
      const label = document.createElement("label");
      label.textContent = target.label;
      const area = document.createElement("textarea");
      area.value = target.text;
      area.rows = Math.min(6, Math.max(1, Math.ceil(target.text.length / 80)));
      const save = document.createElement("button");
      save.textContent = "Save";
      save.onclick = () => void this.save(target.path, area.value);
      field.append(label, area, save);
      this.editorEl.appendChild(field);
    }
  }

  private async save(path: string, text: string): Promise<void> {
    if (!this.current) return;
    const updated = withTextReplaced(this.current, path, text);
    try {
      const result = await this.queue.run(() =>
        this.client.putDocument(this.collectionId, updated, {
          expectedRevision: this.revision,
        }),
      );
      this.current = updated;
      this.revision = result.revision;
      this.status(`saved ${path}`, "ok");
      this.onMutated(result.revision);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.status("document changed elsewhere; reloaded", "err");
        await this.open(this.current.id);
        return;
      }
      this.status(err instanceof Error ? err.message : String(err), "err");
    }
  }
}
