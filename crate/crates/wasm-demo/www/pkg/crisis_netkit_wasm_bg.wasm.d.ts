/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const activity_transforms: (a: number, b: number, c: number, d: number) => [number, number];
export const distance_decay: (a: number, b: number, c: number, d: number) => [number, number];
export const power_law_tail: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
