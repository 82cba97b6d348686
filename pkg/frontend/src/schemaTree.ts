import { ApiClient, ApiError, MutationQueue } from "./api.js";
import {
  GestureEvent,
  GestureState,
  IDLE,
  reduceGesture,
} from "./gestures.js";
import type { Op, SchemaElement, SchemaPayload } from "./types.js";

export type StatusSink = (text: string, kind?: "ok" | "err") => void;

const KIND_BADGE: Record<string, string> = {
  descriptive: "T",
  resource: "R",
  link: "L",
  structural: "G",
};

interface TreeIndex {
  byId: Map<string, SchemaElement>;
  children: Map<string | null, SchemaElement[]>;
}

function indexSchema(schema: SchemaPayload): TreeIndex {
  const byId = new Map(schema.elements.map((e) => [e.id, e]));
  const children = new Map<string | null, SchemaElement[]>();
  for (const element of schema.elements) {
    const list = children.get(element.parent) ?? [];
    list.push(element);
    children.set(element.parent, list);
  }
  for (const list of children.values()) {
    list.sort((a, b) => a.position - b.position);
  }
  return { byId, children };
}

/**
 * Schema editor: renders the element forest and turns clicks, name boxes,
 * and drags into ops on the gateway. All edits go through the gesture
 * reducer so the panel holds no schema logic of its own.
 */
export class SchemaPanel {
  private gesture: GestureState = IDLE;
  private schema: SchemaPayload | null = null;
  private revision = 0;
  private index: TreeIndex | null = null;
  private treeEl: HTMLElement;
  private toolbarEl: HTMLElement;
  private confirmEl: HTMLElement;

  constructor(
    root: HTMLElement,
    private client: ApiClient,
    private collectionId: string,
    private queue: MutationQueue,
    private status: StatusSink,
    private onMutated: (revision: number) => void,
  ) {
    root.innerHTML = "";
    this.toolbarEl = document.createElement("div");
    this.toolbarEl.className = "toolbar";
    this.confirmEl = document.createElement("div");
    this.confirmEl.className = "confirm-bar hidden";
    this.treeEl = document.createElement("div");
    this.treeEl.className = "schema-tree";
    root.append(this.toolbarEl, this.confirmEl, this.treeEl);
    this.renderToolbar();
  }

  async load(): Promise<void> {
    const body = await this.client.schema(this.collectionId);
    this.schema = body.schema;
    this.revision = body.revision;
    this.index = indexSchema(body.schema);
    this.render();
  }

  get currentRevision(): number {
    return this.revision;
  }

  /** Feed one gesture event; sends the op to the server when one completes. */
  dispatch(event: GestureEvent): void {
    const outcome = reduceGesture(this.gesture, event);
    this.gesture = outcome.state;
    if (outcome.error) {
      this.status(outcome.error, "err");
    }
    if (outcome.op) {
      void this.send(outcome.op);
    }
    this.render();
  }

  private async send(op: Op): Promise<void> {
    try {
      const result = await this.queue.run(() =>
        this.client.applyOps(this.collectionId, [op], { expectedRevision: this.revision }),
      );
      this.schema = result.schema;
      this.revision = result.revision;
      this.index = indexSchema(result.schema);
      const touched = result.report.documents_touched;
      this.status(`${op.op}: schema v${result.schema_version}, ${touched} documents migrated`, "ok");
      this.onMutated(result.revision);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.status("collection changed elsewhere; reloaded", "err");
        await this.load();
        return;
      }
      this.status(err instanceof Error ? err.message : String(err), "err");
    }
    this.render();
  }

  /** Remove asks the server for a dry-run impact preview before confirming. */
  private async previewRemove(elementId: string): Promise<void> {
    try {
      const preview = await this.client.applyOps(
        this.collectionId,
        [{ op: "remove", element_id: elementId }],
        { dryRun: true, expectedRevision: this.revision },
      );
      const opReport = preview.report.ops[0];
      const name = this.index?.byId.get(elementId)?.name ?? elementId;
      this.showConfirm(
        `Remove "${name}": drops ${opReport.values_removed} values across ` +
          `${opReport.documents_touched} documents (subtree of ` +
          `${preview.diff.removed.length} elements).`,
      );
    } catch (err) {
      this.status(err instanceof Error ? err.message : String(err), "err");
      this.dispatch({ kind: "cancel" });
    }
  }

  private showConfirm(text: string): void {
    this.confirmEl.classList.remove("hidden");
    this.confirmEl.innerHTML = "";
    const label = document.createElement("span");
    label.textContent = text;
    const yes = document.createElement("button");
    yes.textContent = "Remove";
    yes.className = "danger";
    yes.onclick = () => {
      this.hideConfirm();
      this.dispatch({ kind: "confirmRemove" });
    };
    const no = document.createElement("button");
    no.textContent = "Cancel";
    no.onclick = () => {
      this.hideConfirm();
      this.dispatch({ kind: "cancel" });
    };
    this.confirmEl.append(label, yes, no);
  }

  private hideConfirm(): void {
    this.confirmEl.classList.add("hidden");
    this.confirmEl.innerHTML = "";
  }

  private renderToolbar(): void {
    this.toolbarEl.innerHTML = "";
    const mk = (label: string, onClick: () => void): HTMLButtonElement => {
      const b = document.createElement("button");
      b.textContent = label;
      b.onclick = onClick;
      this.toolbarEl.appendChild(b);
      return b;
    };
    mk("Rename", () => this.dispatch({ kind: "beginRename" }));
    mk("Remove", () => {
      const selected = this.gesture.selected;
      this.dispatch({ kind: "requestRemove" });
      if (this.gesture.mode === "confirming-remove" && selected) {
        void this.previewRemove(selected);
      }
    });
    mk("Merge into...", () => this.dispatch({ kind: "beginMerge" }));
    mk("New group", () => {
      this.dispatch({ kind: "beginGroup" });
      const name = window.prompt("Group name");
      if (name === null) {
        this.dispatch({ kind: "cancel" });
        return;
      }
      this.dispatch({ kind: "typeName", text: name });
      const parent = this.gesture.selected;
      const siblings = this.index?.children.get(parent)?.length ?? 0;
      this.dispatch({ kind: "placeGroup", parent, position: siblings });
    });
    const hint = document.createElement("span");
    hint.className = "mode-hint";
    this.toolbarEl.appendChild(hint);
  }

  private render(): void {
    const hint = this.toolbarEl.querySelector(".mode-hint");
    if (hint) {
      hint.textContent =
        this.gesture.mode === "picking-merge-target"
          ? "click the element to merge into"
          : this.gesture.mode === "dragging"
            ? "drop to move"
            : "";
    }
    if (!this.schema || !this.index) return;
    this.treeEl.innerHTML = "";
    const header = document.createElement("div");
    header.className = "tree-header drop-root";
    header.textContent = `schema v${this.schema.version} · ${this.schema.elements.length} elements`;
    this.wireRootDrop(header);
    this.treeEl.appendChild(header);
    const roots = this.index.children.get(null) ?? [];
    this.treeEl.appendChild(this.renderList(roots));
  }

  private renderList(elements: SchemaElement[]): HTMLUListElement {
    const ul = document.createElement("ul");
    ul.className = "tree";
    for (const element of elements) {
      ul.appendChild(this.renderNode(element));
    }
    return ul;
  }

  private renderNode(element: SchemaElement): HTMLLIElement {
    const li = document.createElement("li");
    const row = document.createElement("div");
    row.className = "row";
    row.dataset.id = element.id;
    if (this.gesture.selected === element.id) row.classList.add("selected");

    const badge = document.createElement("span");
    badge.className = `badge kind-${element.kind}`;
    badge.textContent = KIND_BADGE[element.kind] ?? "?";
    row.appendChild(badge);

    if (this.gesture.mode === "renaming" && this.gesture.selected === element.id) {
      row.appendChild(this.renameBox(element));
    } else {
      const name = document.createElement("span");
      name.className = "name";
      name.textContent = element.name;
      row.appendChild(name);
    }

    const id = document.createElement("span");
    id.className = "eid";
    id.textContent = element.id;
    row.appendChild(id);

    row.onclick = (ev) => {
      ev.stopPropagation();
      if (this.gesture.mode === "picking-merge-target") {
        this.dispatch({ kind: "pickMergeTarget", elementId: element.id });
      } else {
        this.dispatch({ kind: "select", elementId: element.id });
      }
    };
    row.ondblclick = (ev) => {
      ev.stopPropagation();
      this.dispatch({ kind: "select", elementId: element.id });
      this.dispatch({ kind: "beginRename" });
    };
    this.wireDrag(row, element);

    li.appendChild(row);
    const children = this.index?.children.get(element.id) ?? [];
    if (children.length) li.appendChild(this.renderList(children));
    return li;
  }

  private renameBox(element: SchemaElement): HTMLInputElement {
    const input = document.createElement("input");
    input.className = "rename-box";
    input.value = this.gesture.draft || element.name;
    // seed the draft with the current name so Enter with no edits is a no-op rename
    if (!this.gesture.draft) {
      this.gesture = reduceGesture(this.gesture, { kind: "typeName", text: element.name }).state;
    }
    input.oninput = () => {
      this.gesture = reduceGesture(this.gesture, { kind: "typeName", text: input.value }).state;
    };
    input.onkeydown = (ev) => {
      if (ev.key === "Enter") this.dispatch({ kind: "commitRename" });
      if (ev.key === "Escape") this.dispatch({ kind: "cancel" });
    };
    input.onclick = (ev) => ev.stopPropagation();
    queueMicrotask(() => input.focus());
    return input;
  }

  private wireDrag(row: HTMLDivElement, element: SchemaElement): void {
    row.draggable = true;
    row.ondragstart = (ev) => {
      ev.stopPropagation();
      this.dispatch({ kind: "dragStart", elementId: element.id });
      ev.dataTransfer?.setData("text/plain", element.id);
    };
    row.ondragover = (ev) => {
      ev.preventDefault();
      ev.stopPropagation();
      row.classList.add("drop-target");
    };
    row.ondragleave = () => row.classList.remove("drop-target");
    row.ondrop = (ev) => {
      ev.preventDefault();
      ev.stopPropagation();
      row.classList.remove("drop-target");
      const rect = row.getBoundingClientRect();
      const y = ev.clientY - rect.top;
      if (element.kind === "structural" && y > rect.height / 3 && y < (2 * rect.height) / 3) {
        // middle band drops into the group, at the end
        const count = this.index?.children.get(element.id)?.length ?? 0;
        this.dispatch({ kind: "dropOn", parent: element.id, position: count });
      } else {
        const before = y <= rect.height / 2;
        this.dispatch({
          kind: "dropOn",
          parent: element.parent,
          position: before ? element.position : element.position + 1,
        });
      }
    };
  }

  private wireRootDrop(target: HTMLElement): void {
    target.ondragover = (ev) => ev.preventDefault();
    target.ondrop = (ev) => {
      ev.preventDefault();
      const count = this.index?.children.get(null)?.length ?? 0;
      this.dispatch({ kind: "dropOn", parent: null, position: count });
    };
  }
}
