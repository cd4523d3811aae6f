/* tslint:disable */
/* eslint-disable */

/**
 * Steps the tracker through a generated sequence one frame at a time.
 */
export class DemoTracker {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Tracked box then ground truth: `[x, y, w, h, gx, gy, gw, gh]`.
     */
    boxes(): Float64Array;
    /**
     * Current frame as RGBA.
     */
    frameRgba(): Uint8Array;
    constructor(seed: number, noise_sigma: number, k: number, frames: number);
    responseHeight(): number;
    /**
     * Last fused response, min-max scaled, as RGBA; empty before the first step.
     */
    responseRgba(): Uint8Array;
    responseWidth(): number;
    /**
     * Advances one frame; false once the sequence is exhausted.
     */
    step(): boolean;
    readonly frames: number;
    readonly height: number;
    readonly index: number;
    readonly sim: number;
    readonly weight: number;
    readonly width: number;
}

/**
 * Spectral residual saliency of canvas pixels, returned as RGBA.
 */
export function saliencyRgba(width: number, height: number, rgba: Uint8Array): Uint8Array;

/**
 * Weight after each similarity in `sims`, starting from `w0`.
 */
export function weightTrajectory(k: number, lambda_w: number, w0: number, rule: string, sims: Float64Array): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demotracker_free: (a: number, b: number) => void;
    readonly demotracker_boxes: (a: number) => [number, number];
    readonly demotracker_frameRgba: (a: number) => [number, number];
    readonly demotracker_frames: (a: number) => number;
    readonly demotracker_height: (a: number) => number;
    readonly demotracker_index: (a: number) => number;
    readonly demotracker_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly demotracker_responseHeight: (a: number) => number;
    readonly demotracker_responseRgba: (a: number) => [number, number];
    readonly demotracker_responseWidth: (a: number) => number;
    readonly demotracker_sim: (a: number) => number;
    readonly demotracker_step: (a: number) => [number, number, number];
    readonly demotracker_weight: (a: number) => number;
    readonly demotracker_width: (a: number) => number;
    readonly saliencyRgba: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly weightTrajectory: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
