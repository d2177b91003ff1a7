/**
 * Planar homography estimation from point correspondences.
 *
 * The direct linear transform builds the 2n x 9 system from >= 4
 * (pixel, pitch) pairs, solves for the smallest-eigenvalue direction of
 * AtA (cyclic Jacobi on the 9x9 symmetric matrix), and normalizes so the
 * bottom-right entry is 1. Both point sets are Hartley-normalized first
 * for conditioning. Exact data is recovered to solver tolerance.
 */

export interface Point {
  x: number;
  y: number;
}

export interface Correspondence {
  pixel: Point;
  pitch: Point;
}

export interface Homography {
  /** 3x3 row-major matrix mapping pixel homogeneous coords to pitch coords. */
  matrix: number[][];
  /** Ratio of largest to smallest nonzero singular value of the system. */
  condition: number;
  /** Root-mean-square reprojection error in pixel units. */
  reprojectionRmsPx: number;
}

export class CalibrationError extends Error {}

const COLLINEAR_AREA_TOLERANCE = 1e-9;

/** Indices of the first collinear pitch-point triple, or null. */
export function findCollinearTriple(points: Point[]): [number, number, number] | null {
  for (let i = 0; i < points.length; i++) {
    for (let j = i + 1; j < points.length; j++) {
      for (let k = j + 1; k < points.length; k++) {
        const area =
          (points[j].x - points[i].x) * (points[k].y - points[i].y) -
          (points[k].x - points[i].x) * (points[j].y - points[i].y);
        const scale =
          Math.hypot(points[j].x - points[i].x, points[j].y - points[i].y) *
          Math.hypot(points[k].x - points[i].x, points[k].y - points[i].y);
        if (Math.abs(area) <= COLLINEAR_AREA_TOLERANCE * Math.max(scale, 1)) {
          return [i, j, k];
        }
      }
    }
  }
  return null;
}

interface Normalization {
  transformed: Point[];
  /** 3x3 similarity carrying original points to normalized ones. */
  matrix: number[][];
}

function hartleyNormalize(points: Point[]): Normalization {
  const n = points.length;
  let cx = 0;
  let cy = 0;
  for (const p of points) {
    cx += p.x / n;
    cy += p.y / n;
  }
  let meanDist = 0;
  for (const p of points) {
    meanDist += Math.hypot(p.x - cx, p.y - cy) / n;
  }
  const scale = meanDist > 0 ? Math.SQRT2 / meanDist : 1.0;
  return {
    transformed: points.map((p) => ({ x: (p.x - cx) * scale, y: (p.y - cy) * scale })),
    matrix: [
      [scale, 0, -scale * cx],
      [0, scale, -scale * cy],
      [0, 0, 1],
    ],
  };
}

export function matMul3(a: number[][], b: number[][]): number[][] {
  const out = [
    [0, 0, 0],
    [0, 0, 0],
    [0, 0, 0],
  ];
  for (let i = 0; i < 3; i++) {
    for (let j = 0; j < 3; j++) {
      for (let k = 0; k < 3; k++) {
        out[i][j] += a[i][k] * b[k][j];
      }
    }
  }
  return out;
}

export function invert3(m: number[][]): number[][] {
  const [a, b, c] = m[0];
  const [d, e, f] = m[1];
  const [g, h, i] = m[2];
  const det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
  if (!isFinite(det) || Math.abs(det) < 1e-300) {
    throw new CalibrationError("matrix is not invertible");
  }
  return [
    [(e * i - f * h) / det, (c * h - b * i) / det, (b * f - c * e) / det],
    [(f * g - d * i) / det, (a * i - c * g) / det, (c * d - a * f) / det],
    [(d * h - e * g) / det, (b * g - a * h) / det, (a * e - b * d) / det],
  ];
}

/**
 * Smallest-eigenvalue eigenvector of a symmetric matrix via cyclic
 * Jacobi rotations. Returns { vector, eigenvalues }.
 */
function smallestEigenvector(sym: number[][]): { vector: number[]; eigenvalues: number[] } {
  const n = sym.length;
  const a = sym.map((row) => row.slice());
  // eigenvector accumulator
  const v: number[][] = [];
  for (let i = 0; i < n; i++) {
    v.push(new Array(n).fill(0));
    v[i][i] = 1;
  }
  for (let sweep = 0; sweep < 60; sweep++) {
    let off = 0;
    for (let p = 0; p < n; p++) {
      for (let q = p + 1; q < n; q++) {
        off += a[p][q] * a[p][q];
      }
    }
    if (off < 1e-30) break;
    for (let p = 0; p < n; p++) {
      for (let q = p + 1; q < n; q++) {
        if (Math.abs(a[p][q]) < 1e-300) continue;
        const theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const t = Math.sign(theta || 1) / (Math.abs(theta) + Math.sqrt(theta * theta + 1));
        const c = 1 / Math.sqrt(t * t + 1);
        const s = t * c;
        for (let k = 0; k < n; k++) {
          const akp = a[k][p];
          const akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (let k = 0; k < n; k++) {
          const apk = a[p][k];
          const aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (let k = 0; k < n; k++) {
          const vkp = v[k][p];
          const vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  const eigenvalues = a.map((row, i) => row[i]);
  let best = 0;
  for (let i = 1; i < n; i++) {
    if (Math.abs(eigenvalues[i]) < Math.abs(eigenvalues[best])) best = i;
  }
  return { vector: v.map((row) => row[best]), eigenvalues };
}

/** Apply a homography to one point; throws near the plane at infinity. */
export function applyHomography(h: Homography | number[][], pixel: Point): Point {
  const m = Array.isArray(h) ? h : h.matrix;
  const w = m[2][0] * pixel.x + m[2][1] * pixel.y + m[2][2];
  if (!isFinite(w) || Math.abs(w) < 1e-12) {
    throw new CalibrationError(`point (${pixel.x}, ${pixel.y}) maps to the plane at infinity`);
  }
  return {
    x: (m[0][0] * pixel.x + m[0][1] * pixel.y + m[0][2]) / w,
    y: (m[1][0] * pixel.x + m[1][1] * pixel.y + m[1][2]) / w,
  };
}

export function computeHomography(correspondences: Correspondence[]): Homography {
  if (correspondences.length < 4) {
    throw new CalibrationError(
      `need at least 4 correspondences, got ${correspondences.length}`
    );
  }
  const triple = findCollinearTriple(correspondences.map((c) => c.pitch));
  if (triple !== null) {
    throw new CalibrationError(
      `pitch points ${triple.join(", ")} are collinear; pick points in general position`
    );
  }

  const pixelNorm = hartleyNormalize(correspondences.map((c) => c.pixel));
  const pitchNorm = hartleyNormalize(correspondences.map((c) => c.pitch));

  // rows of the DLT system for h = vec(H), pixel -> pitch
  const rows: number[][] = [];
  for (let i = 0; i < correspondences.length; i++) {
    const { x, y } = pixelNorm.transformed[i];
    const { x: u, y: vY } = pitchNorm.transformed[i];
    rows.push([x, y, 1, 0, 0, 0, -u * x, -u * y, -u]);
    rows.push([0, 0, 0, x, y, 1, -vY * x, -vY * y, -vY]);
  }
  const ata: number[][] = [];
  for (let i = 0; i < 9; i++) {
    ata.push(new Array(9).fill(0));
  }
  for (const row of rows) {
    for (let i = 0; i < 9; i++) {
      for (let j = 0; j < 9; j++) {
        ata[i][j] += row[i] * row[j];
      }
    }
  }
  const { vector, eigenvalues } = smallestEigenvector(ata);
  const magnitudes = eigenvalues.map(Math.abs).sort((a, b) => a - b);
  const smallestNonzero = magnitudes.find((m) => m > 1e-20) ?? 1e-20;
  const condition = Math.sqrt(magnitudes[8] / smallestNonzero);

  const hNorm = [vector.slice(0, 3), vector.slice(3, 6), vector.slice(6, 9)];
  // denormalize: H = Tpitch^-1 * Hnorm * Tpixel
  const matrix = matMul3(invert3(pitchNorm.matrix), matMul3(hNorm, pixelNorm.matrix));
  const s = matrix[2][2];
  if (!isFinite(s) || Math.abs(s) < 1e-300) {
    throw new CalibrationError("degenerate solution: cannot normalize the matrix");
  }
  for (let i = 0; i < 3; i++) {
    for (let j = 0; j < 3; j++) {
      matrix[i][j] /= s;
    }
  }

  // reprojection error in pixel units through the inverse map
  const inverse = invert3(matrix);
  let sumSq = 0;
  for (const c of correspondences) {
    const back = applyHomography(inverse, c.pitch);
    sumSq += (back.x - c.pixel.x) ** 2 + (back.y - c.pixel.y) ** 2;
  }
  return {
    matrix,
    condition,
    reprojectionRmsPx: Math.sqrt(sumSq / correspondences.length),
  };
}
