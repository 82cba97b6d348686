import { ApiClient, MutationQueue } from "./api.js";
import { imageTargets, type ImageTarget } from "./paths.js";
import {
  dragToRect,
  isNegligible,
  pixelToRegion,
  quantizeRegion,
  regionToPixels,
  type Point,
} from "./region.js";
import type { StatusSink } from "./schemaTree.js";
import type { Annotation, Region } from "./types.js";

/**
 * Annotation canvas: pick a document image, drag a rectangle, attach an
 * explanation. Rectangles are stored normalized so they are display-size
 * independent; existing ones are drawn from a fresh server read.
 */
export class AnnotatePanel {
  private pickerEl: HTMLSelectElement;
  private docPickerEl: HTMLSelectElement;
  private canvas: HTMLCanvasElement;
  private image: HTMLImageElement | null = null;
  private targets: ImageTarget[] = [];
  private currentTarget: ImageTarget | null = null;
  private currentDoc: string | null = null;
  private existing: Annotation[] = [];
  private dragStartPoint: Point | null = null;
  private dragNow: Point | null = null;
  private revision = 0;

  constructor(
    root: HTMLElement,
    private client: ApiClient,
    private collectionId: string,
    private queue: MutationQueue,
    private status: StatusSink,
    private onMutated: (revision: number) => void,
  ) {
    root.innerHTML = "";
    const bar = document.createElement("div");
    bar.className = "toolbar";
    this.docPickerEl = document.createElement("select");
    this.pickerEl = document.createElement("select");
    bar.append(this.docPickerEl, this.pickerEl);
    this.canvas = document.createElement("canvas");
    this.canvas.className = "annotate-canvas";
    this.canvas.width = 640;
    this.canvas.height = 480;
    root.append(bar, this.canvas);
    this.docPickerEl.onchange = () => void this.openDoc(this.docPickerEl.value);
    this.pickerEl.onchange = () => void this.openTarget(parseInt(this.pickerEl.value, 10));
    this.wirePointer();
  }

  async load(): Promise<void> {
    const docs = await this.client.documents(this.collectionId);
    this.docPickerEl.innerHTML = "";
    for (const doc of docs) {
      const option = document.createElement("option");
      option.value = doc.id;
      option.textContent = `${doc.id} — ${doc.title}`;
      this.docPickerEl.appendChild(option);
    }
    if (docs.length) await this.openDoc(docs[0].id);
  }

  private async openDoc(docId: string): Promise<void> {
    this.currentDoc = docId;
    const [schemaBody, docBody, resources] = await Promise.all([
      this.client.schema(this.collectionId),
      this.client.document(this.collectionId, docId),
      this.client.resources(this.collectionId),
    ]);
    this.revision = docBody.revision;
    const mediaTypes = Object.fromEntries(
      Object.entries(resources).map(([rid, r]) => [rid, r.media_type]),
    );
    this.targets = imageTargets(docBody.document, schemaBody.schema.elements, mediaTypes);
    this.pickerEl.innerHTML = "";
    this.targets.forEach((target, i) => {
      const option = document.createElement("option");
      option.value = String(i);
      option.textContent = `${target.label} (${target.resourceId})`;
      this.pickerEl.appendChild(option);
    });
    if (this.targets.length) {
      await this.openTarget(0);
    } else {
      this.currentTarget = null;
      this.clear("document has no images");
    }
  }

  private async openTarget(index: number): Promise<void> {
    const target = this.targets[index];
    if (!target || !this.currentDoc) return;
    this.currentTarget = target;
    this.existing = await this.client.annotations(this.collectionId, this.currentDoc, target.path);
    this.image = await this.loadImage(this.client.blobUrl(this.collectionId, target.resourceId));
    this.draw();
  }

  private loadImage(url: string): Promise<HTMLImageElement> {
    return new Promise((resolve, reject) => {
      const img = new Image();
      img.onload = () => resolve(img);
      img.onerror = () => reject(new Error(`cannot load ${url}`));
      img.src = url;
    });
  }

  private clear(message: string): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    ctx.fillStyle = "#666";
    ctx.fillText(message, 16, 24);
  }

  private draw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    if (this.image) {
      ctx.drawImage(this.image, 0, 0, this.canvas.width, this.canvas.height);
    }
    ctx.lineWidth = 2;
    ctx.strokeStyle = "#e4b400";
    ctx.fillStyle = "rgba(228, 180, 0, 0.15)";
    for (const annotation of this.existing) {
      const rect = regionToPixels(annotation.region, this.canvas.width, this.canvas.height);
      ctx.fillRect(rect.left, rect.top, rect.width, rect.height);
      ctx.strokeRect(rect.left, rect.top, rect.width, rect.height);
    }
    if (this.dragStartPoint && this.dragNow) {
      const rect = dragToRect(this.dragStartPoint, this.dragNow);
      ctx.strokeStyle = "#0e7490";
      ctx.strokeRect(rect.left, rect.top, rect.width, rect.height);
    }
  }

  private canvasPoint(ev: MouseEvent): Point {
    const rect = this.canvas.getBoundingClientRect();
    return {
      x: ((ev.clientX - rect.left) * this.canvas.width) / rect.width,
      y: ((ev.clientY - rect.top) * this.canvas.height) / rect.height,
    };
  }

  private wirePointer(): void {
    this.canvas.onmousedown = (ev) => {
      if (!this.currentTarget) return;
      this.dragStartPoint = this.canvasPoint(ev);
      this.dragNow = this.dragStartPoint;
    };
    this.canvas.onmousemove = (ev) => {
      if (!this.dragStartPoint) return;
      this.dragNow = this.canvasPoint(ev);
      this.draw();
    };
    this.canvas.onmouseup = (ev) => {
      if (!this.dragStartPoint) return;
      const rect = dragToRect(this.dragStartPoint, this.canvasPoint(ev));
      this.dragStartPoint = null;
      this.dragNow = null;
      this.draw();
      if (isNegligible(rect)) return;
      const region = quantizeRegion(pixelToRegion(rect, this.canvas.width, this.canvas.height));
      const explanation = window.prompt("Explanation for this region") ?? "";
      void this.submit(region, explanation);
    };
  }

  private async submit(region: Region, explanation: string): Promise<void> {
    const target = this.currentTarget;
    const docId = this.currentDoc;
    if (!target || !docId) return;
    try {
      const result = await this.queue.run(() =>
        this.client.annotate(this.collectionId, docId, target.path, region, explanation, {
          expectedRevision: this.revision,
        }),
      );
      this.revision = result.revision;
      // re-read instead of trusting local state; what you see is what persisted
      this.existing = await this.client.annotations(this.collectionId, docId, target.path);
      this.draw();
      this.status(`annotated ${target.path}`, "ok");
      this.onMutated(result.revision);
    } catch (err) {
      this.status(err instanceof Error ? err.message : String(err), "err");
    }
  }
}
