/**
 * Deterministic RNG so encoder weights and the test corpus are
 * reproducible byte-for-byte across runs and machines.
 */

const MASK64 = (1n << 64n) - 1n;

/** FNV-1a, 64-bit: stable string → seed mapping. */
export function hashString(s: string): bigint {
  let h = 0xcbf29ce484222325n;
  for (let i = 0; i < s.length; i++) {
    h ^= BigInt(s.charCodeAt(i));
    h = (h * 0x100000001b3n) & MASK64;
  }
  return h;
}

/** splitmix64; plenty for weight generation, not for cryptography. */
export class Rng {
  private state: bigint;
  private spareNormal: number | null = null;

  constructor(seed: bigint | number | string) {
    if (typeof seed === "string") seed = hashString(seed);
    this.state = BigInt(seed) & MASK64;
  }

  nextUint64(): bigint {
    this.state = (this.state + 0x9e3779b97f4a7c15n) & MASK64;
    let z = this.state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
    return z ^ (z >> 31n);
  }

  /** Uniform in [0, 1) with 53 bits of precision. */
  next(): number {
    return Number(this.nextUint64() >> 11n) / 2 ** 53;
  }

  /** Standard normal via Box-Muller. */
  normal(): number {
    if (this.spareNormal !== null) {
      const v = this.spareNormal;
      this.spareNormal = null;
      return v;
    }
    let u = 0;
    while (u === 0) u = this.next();
    const r = Math.sqrt(-2 * Math.log(u));
    const theta = 2 * Math.PI * this.next();
    this.spareNormal = r * Math.sin(theta);
    return r * Math.cos(theta);
  }

  int(maxExclusive: number): number {
    return Math.floor(this.next() * maxExclusive);
  }
}
