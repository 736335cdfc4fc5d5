/**
 * Deterministic shuffling that will never drift between releases: a fixed
 * splitmix32 stream feeding a Fisher-Yates pass.  Math.random would make
 * "byte-identical re-runs with the same seed" impossible to promise.
 */

/** splitmix32: one 32-bit state word, high-quality avalanche per draw. */
export function splitmix32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x9e3779b9) >>> 0;
    let z = state;
    z ^= z >>> 16;
    z = Math.imul(z, 0x21f0aaad);
    z ^= z >>> 15;
    z = Math.imul(z, 0x735a2d97);
    z ^= z >>> 15;
    return (z >>> 0) / 4294967296;
  };
}

/** In-place Fisher-Yates driven by the generator above. */
export function shuffle<T>(items: T[], seed: number): T[] {
  const next = splitmix32(seed);
  for (let i = items.length - 1; i > 0; i--) {
    const j = Math.floor(next() * (i + 1));
    const tmp = items[i]!;
    items[i] = items[j]!;
    items[j] = tmp;
  }
  return items;
}
