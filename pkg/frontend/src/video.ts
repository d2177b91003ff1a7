/**
 * Frame arithmetic for frame-accurate stepping over a <video> element.
 *
 * Seeks target the middle of a frame interval so decoder rounding never
 * lands on a neighboring frame.
 */

export function frameToSeekTime(frame: number, frameRate: number): number {
  return (frame + 0.5) / frameRate;
}

export function timeToFrame(seconds: number, frameRate: number): number {
  return Math.max(0, Math.floor(seconds * frameRate + 1e-6));
}

export function clampFrame(frame: number, totalFrames: number): number {
  return Math.min(Math.max(frame, 0), totalFrames - 1);
}

export function stepFrame(current: number, delta: number, totalFrames: number): number {
  return clampFrame(current + delta, totalFrames);
}

export function frameCount(durationSeconds: number, frameRate: number): number {
  return Math.max(1, Math.round(durationSeconds * frameRate));
}
