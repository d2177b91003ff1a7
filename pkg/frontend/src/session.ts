/**
 * Annotation session state: the ordered annotation list, the editable
 * option lists (one row per option), and the optional pitch calibration.
 *
 * Invariants enforced here, not in the UI: frames stay inside the video,
 * an annotation always carries a selected event type and team, and pitch
 * coordinates exist exactly when a calibration is set.
 */

import {
  Correspondence,
  Homography,
  Point,
  applyHomography,
  computeHomography,
} from "./homography.js";

export interface Annotation {
  frame: number;
  eventType: string;
  team: string;
  pixel: Point;
  pitch: Point | null;
}

export interface OptionConfig {
  eventTypes: string[];
  teams: string[];
}

export class AnnotationError extends Error {}

/** Standardized vocabulary shipped as the default option rows. */
export const DEFAULT_EVENT_TYPES = [
  "Short Pass",
  "High Pass",
  "Long Pass",
  "Shot",
  "Carry",
  "Dribble",
  "Cross",
];

export const DEFAULT_TEAMS = ["home", "away"];

export const PITCH_LENGTH = 105;
export const PITCH_WIDTH = 68;

export interface AnnotationView extends Annotation {
  index: number;
  seconds: number;
  /** false when a calibrated point lands outside the pitch (flag, no clamp). */
  insidePitch: boolean | null;
}

export class AnnotationSession {
  readonly frameRate: number;
  readonly totalFrames: number;
  readonly pixelRange: { width: number; height: number };
  videoName: string;
  options: OptionConfig;
  calibration: Homography | null = null;
  private annotations: Annotation[] = [];

  constructor(
    videoName: string,
    frameRate: number,
    totalFrames: number,
    pixelRange: { width: number; height: number },
    options?: OptionConfig
  ) {
    if (frameRate <= 0) throw new AnnotationError("frame rate must be positive");
    if (totalFrames <= 0) throw new AnnotationError("video has no frames");
    this.videoName = videoName;
    this.frameRate = frameRate;
    this.totalFrames = totalFrames;
    this.pixelRange = pixelRange;
    this.options = options ?? {
      eventTypes: [...DEFAULT_EVENT_TYPES],
      teams: [...DEFAULT_TEAMS],
    };
  }

  list(): AnnotationView[] {
    return this.annotations.map((a, index) => ({
      ...a,
      index,
      seconds: a.frame / this.frameRate,
      insidePitch:
        a.pitch === null
          ? null
          : a.pitch.x >= 0 &&
            a.pitch.x <= PITCH_LENGTH &&
            a.pitch.y >= 0 &&
            a.pitch.y <= PITCH_WIDTH,
    }));
  }

  add(frame: number, eventType: string, team: string, pixel: Point): AnnotationView {
    if (!eventType) {
      throw new AnnotationError("select an event type before annotating");
    }
    if (!team) {
      throw new AnnotationError("select a team before annotating");
    }
    if (!this.options.eventTypes.includes(eventType)) {
      throw new AnnotationError(`event type ${eventType} is not in the configured options`);
    }
    if (!this.options.teams.includes(team)) {
      throw new AnnotationError(`team ${team} is not in the configured options`);
    }
    if (!Number.isInteger(frame) || frame < 0 || frame >= this.totalFrames) {
      throw new AnnotationError(`frame ${frame} outside the video (0..${this.totalFrames - 1})`);
    }
    const annotation: Annotation = {
      frame,
      eventType,
      team,
      pixel,
      pitch: this.calibration ? applyHomography(this.calibration, pixel) : null,
    };
    // keep the list ordered by frame; equal frames keep insertion order
    let at = this.annotations.length;
    while (at > 0 && this.annotations[at - 1].frame > frame) at--;
    this.annotations.splice(at, 0, annotation);
    return this.list()[at];
  }

  delete(index: number): void {
    if (index < 0 || index >= this.annotations.length) {
      throw new AnnotationError(`no annotation at index ${index}`);
    }
    this.annotations.splice(index, 1);
  }

  count(): number {
    return this.annotations.length;
  }

  /** Replace an option list from editor rows (one option per row). */
  setOptions(kind: keyof OptionConfig, rows: string): void {
    const values = rows
      .split("\n")
      .map((row) => row.trim())
      .filter((row) => row.length > 0);
    if (values.length === 0) {
      throw new AnnotationError("option list cannot be empty");
    }
    this.options = { ...this.options, [kind]: values };
  }

  calibrate(correspondences: Correspondence[]): Homography {
    const homography = computeHomography(correspondences);
    this.calibration = homography;
    for (const a of this.annotations) {
      a.pitch = applyHomography(homography, a.pixel);
    }
    return homography;
  }

  clearCalibration(): void {
    this.calibration = null;
    for (const a of this.annotations) {
      a.pitch = null;
    }
  }
}
