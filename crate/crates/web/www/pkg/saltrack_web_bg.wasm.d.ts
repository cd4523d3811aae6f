/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demotracker_free: (a: number, b: number) => void;
export const demotracker_boxes: (a: number) => [number, number];
export const demotracker_frameRgba: (a: number) => [number, number];
export const demotracker_frames: (a: number) => number;
export const demotracker_height: (a: number) => number;
export const demotracker_index: (a: number) => number;
export const demotracker_new: (a: number, b: number, c: number, d: number) => [number, number, number];
export const demotracker_responseHeight: (a: number) => number;
export const demotracker_responseRgba: (a: number) => [number, number];
export const demotracker_responseWidth: (a: number) => number;
export const demotracker_sim: (a: number) => number;
export const demotracker_step: (a: number) => [number, number, number];
export const demotracker_weight: (a: number) => number;
export const demotracker_width: (a: number) => number;
export const saliencyRgba: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const weightTrajectory: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
