/**
 * Three-column annotation workspace wired onto the page:
 *
 * left    existing annotations with jump-to-frame and delete,
 * middle  the video with frame-accurate stepping (+-1, +-10, play/pause),
 * right   option config editor, event type / team selectors, position
 *         capture by clicking the frame, calibration, and CSV export.
 *
 * All state lives in an AnnotationSession; the DOM is a thin view. The
 * app runs entirely on local files: nothing leaves the browser.
 */

import { CalibrationError, Correspondence } from "./homography.js";
import { AnnotationError, AnnotationSession } from "./session.js";
import { exportCsv, parseSte1 } from "./ste1.js";
import { frameCount, frameToSeekTime, stepFrame, timeToFrame } from "./video.js";

interface Elements {
  video: HTMLVideoElement;
  fileInput: HTMLInputElement;
  frameRateInput: HTMLInputElement;
  frameLabel: HTMLElement;
  annotationList: HTMLElement;
  eventTypeSelect: HTMLSelectElement;
  teamSelect: HTMLSelectElement;
  status: HTMLElement;
  configDialog: HTMLDialogElement;
  configEventTypes: HTMLTextAreaElement;
  configTeams: HTMLTextAreaElement;
  calibrationDialog: HTMLDialogElement;
  calibrationPairs: HTMLTextAreaElement;
}

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

export class App {
  private session: AnnotationSession | null = null;
  private currentFrame = 0;
  private readonly ui: Elements;

  constructor() {
    this.ui = {
      video: el("video"),
      fileInput: el("video-file"),
      frameRateInput: el("frame-rate"),
      frameLabel: el("frame-label"),
      annotationList: el("annotation-list"),
      eventTypeSelect: el("event-type"),
      teamSelect: el("team"),
      status: el("status"),
      configDialog: el("config-dialog"),
      configEventTypes: el("config-event-types"),
      configTeams: el("config-teams"),
      calibrationDialog: el("calibration-dialog"),
      calibrationPairs: el("calibration-pairs"),
    };
    this.bind();
  }

  private bind(): void {
    this.ui.fileInput.addEventListener("change", () => this.loadVideo());
    el("step-back-10").addEventListener("click", () => this.step(-10));
    el("step-back-1").addEventListener("click", () => this.step(-1));
    el("step-fwd-1").addEventListener("click", () => this.step(1));
    el("step-fwd-10").addEventListener("click", () => this.step(10));
    el("play-pause").addEventListener("click", () => this.togglePlay());
    this.ui.video.addEventListener("timeupdate", () => this.syncFrameFromVideo());
    this.ui.video.addEventListener("click", (event) => this.annotateAt(event));
    el("open-config").addEventListener("click", () => this.openConfig());
    el("apply-config").addEventListener("click", () => this.applyConfig());
    el("open-calibration").addEventListener("click", () =>
      this.ui.calibrationDialog.showModal()
    );
    el("apply-calibration").addEventListener("click", () => this.applyCalibration());
    el("clear-calibration").addEventListener("click", () => {
      this.session?.clearCalibration();
      this.report("calibration cleared");
      this.render();
    });
    el("export-csv").addEventListener("click", () => this.exportCsv());
    el<HTMLInputElement>("import-file").addEventListener("change", (e) =>
      this.importCsv(e)
    );
    document.addEventListener("keydown", (event) => {
      if (event.target instanceof HTMLInputElement) return;
      if (event.key === "ArrowLeft") this.step(event.shiftKey ? -10 : -1);
      if (event.key === "ArrowRight") this.step(event.shiftKey ? 10 : 1);
      if (event.key === " ") {
        event.preventDefault();
        this.togglePlay();
      }
    });
  }

  private report(message: string): void {
    this.ui.status.textContent = message;
  }

  private loadVideo(): void {
    const file = this.ui.fileInput.files?.[0];
    if (!file) return;
    const url = URL.createObjectURL(file);
    this.ui.video.src = url;
    this.ui.video.addEventListener(
      "loadedmetadata",
      () => {
        const frameRate = Number(this.ui.frameRateInput.value) || 25;
        this.session = new AnnotationSession(
          file.name,
          frameRate,
          frameCount(this.ui.video.duration, frameRate),
          { width: this.ui.video.videoWidth, height: this.ui.video.videoHeight }
        );
        this.currentFrame = 0;
        this.seek();
        this.render();
        this.report(`loaded ${file.name}`);
      },
      { once: true }
    );
  }

  private step(delta: number): void {
    if (!this.session) return;
    this.ui.video.pause();
    this.currentFrame = stepFrame(this.currentFrame, delta, this.session.totalFrames);
    this.seek();
  }

  private seek(): void {
    if (!this.session) return;
    this.ui.video.currentTime = frameToSeekTime(this.currentFrame, this.session.frameRate);
    this.renderFrameLabel();
  }

  private togglePlay(): void {
    if (this.ui.video.paused) {
      void this.ui.video.play();
    } else {
      this.ui.video.pause();
      this.syncFrameFromVideo();
    }
  }

  private syncFrameFromVideo(): void {
    if (!this.session) return;
    this.currentFrame = Math.min(
      timeToFrame(this.ui.video.currentTime, this.session.frameRate),
      this.session.totalFrames - 1
    );
    this.renderFrameLabel();
  }

  private renderFrameLabel(): void {
    const total = this.session ? this.session.totalFrames : 0;
    this.ui.frameLabel.textContent = `frame ${this.currentFrame} / ${total - 1}`;
  }

  private annotateAt(event: MouseEvent): void {
    if (!this.session) {
      this.report("load a video first");
      return;
    }
    const rect = this.ui.video.getBoundingClientRect();
    const scaleX = this.ui.video.videoWidth / rect.width;
    const scaleY = this.ui.video.videoHeight / rect.height;
    const pixel = {
      x: (event.clientX - rect.left) * scaleX,
      y: (event.clientY - rect.top) * scaleY,
    };
    try {
      this.session.add(
        this.currentFrame,
        this.ui.eventTypeSelect.value,
        this.ui.teamSelect.value,
        pixel
      );
      this.report(
        `annotated ${this.ui.eventTypeSelect.value} at frame ${this.currentFrame}`
      );
      this.render();
    } catch (error) {
      if (error instanceof AnnotationError) {
        this.report(error.message); // inline prompt, no record created
      } else {
        throw error;
      }
    }
  }

  private openConfig(): void {
    if (!this.session) return;
    this.ui.configEventTypes.value = this.session.options.eventTypes.join("\n");
    this.ui.configTeams.value = this.session.options.teams.join("\n");
    this.ui.configDialog.showModal();
  }

  private applyConfig(): void {
    if (!this.session) return;
    try {
      this.session.setOptions("eventTypes", this.ui.configEventTypes.value);
      this.session.setOptions("teams", this.ui.configTeams.value);
      this.ui.configDialog.close();
      this.render();
      this.report("options updated");
    } catch (error) {
      if (error instanceof AnnotationError) this.report(error.message);
      else throw error;
    }
  }

  private applyCalibration(): void {
    if (!this.session) return;
    try {
      const pairs: Correspondence[] = [];
      for (const line of this.ui.calibrationPairs.value.split("\n")) {
        const cells = line.split(",").map((c) => Number(c.trim()));
        if (cells.length === 4 && cells.every(isFinite)) {
          pairs.push({
            pixel: { x: cells[0], y: cells[1] },
            pitch: { x: cells[2], y: cells[3] },
          });
        }
      }
      const homography = this.session.calibrate(pairs);
      this.ui.calibrationDialog.close();
      this.report(
        `calibrated: reprojection RMS ${homography.reprojectionRmsPx.toExponential(2)} px`
      );
      this.render();
    } catch (error) {
      if (error instanceof CalibrationError) this.report(error.message);
      else throw error;
    }
  }

  private exportCsv(): void {
    if (!this.session) return;
    const blob = new Blob([exportCsv(this.session)], { type: "text/csv" });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = this.session.videoName.replace(/\.[^.]*$/, "") + "_events.csv";
    link.click();
    URL.revokeObjectURL(link.href);
    this.report(`exported ${this.session.count()} annotations`);
  }

  private importCsv(event: Event): void {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file || !this.session) return;
    void file.text().then((text) => {
      const parsed = parseSte1(text);
      for (const row of parsed.rows) {
        if (!this.session!.options.eventTypes.includes(row.eventType)) {
          this.session!.options.eventTypes.push(row.eventType);
        }
        if (!this.session!.options.teams.includes(row.team)) {
          this.session!.options.teams.push(row.team);
        }
        this.session!.add(row.frame, row.eventType, row.team, row.pixel);
      }
      this.render();
      this.report(`imported ${parsed.rows.length} annotations`);
    });
  }

  private render(): void {
    if (!this.session) return;
    const fill = (select: HTMLSelectElement, values: string[]) => {
      const previous = select.value;
      select.innerHTML = "";
      for (const value of values) {
        const option = document.createElement("option");
        option.value = value;
        option.textContent = value;
        select.appendChild(option);
      }
      if (values.includes(previous)) select.value = previous;
    };
    fill(this.ui.eventTypeSelect, this.session.options.eventTypes);
    fill(this.ui.teamSelect, this.session.options.teams);

    this.ui.annotationList.innerHTML = "";
    for (const view of this.session.list()) {
      const row = document.createElement("li");
      const label = document.createElement("span");
      const where = view.pitch
        ? ` (${view.pitch.x.toFixed(1)}, ${view.pitch.y.toFixed(1)} m` +
          (view.insidePitch ? ")" : ", off pitch)")
        : "";
      label.textContent = `#${view.frame} ${view.eventType} [${view.team}]${where}`;
      const jump = document.createElement("button");
      jump.textContent = "go";
      jump.addEventListener("click", () => {
        this.currentFrame = view.frame;
        this.seek();
      });
      const remove = document.createElement("button");
      remove.textContent = "x";
      remove.addEventListener("click", () => {
        this.session!.delete(view.index);
        this.render();
      });
      row.append(label, jump, remove);
      this.ui.annotationList.appendChild(row);
    }
    this.renderFrameLabel();
  }
}

if (typeof document !== "undefined" && document.getElementById("video")) {
  new App();
}
