import type { Guidelines, PendingClaim } from "../src/api.js";

/** Compact guideline fixture with the real category names. */
export const GUIDELINES: Guidelines = {
  version: "t",
  likert: {
    "1": "clearly fine",
    "2": "probably fine",
    "3": "unclear",
    "4": "probably violating",
    "5": "clearly violating",
  },
  stage1_categories: {
    UNAPPROVED: "treatment not approved",
    APPROVED: "treatment approved",
    UNSURE: "cannot tell",
    NOT_A_TREATMENT: "not a treatment claim",
    GENERAL_HEALTH_ADVICE: "generic advice",
    REPEAT: "already decided claim",
  },
};

export function claim(id: string, overrides: Partial<PendingClaim> = {}): PendingClaim {
  return {
    cluster_id: id,
    canonical: `claim ${id}`,
    flag_date: "2020-04-03",
    first_seen: "2020-04-03",
    post_count: 8,
    p: 0.01,
    z: 2.0,
    rank: 1,
    required: 1,
    decisions_so_far: 0,
    examples: [{ post_id: `${id}-p1`, text: `example for ${id}` }],
    ...overrides,
  };
}

export function fakeClock() {
  let ms = 0;
  return {
    now: () => ms,
    advance: (by: number) => {
      ms += by;
    },
  };
}

type Listener = () => void;

export function fakeWindow() {
  const listeners = new Map<string, Set<Listener>>();
  return {
    addEventListener(type: string, fn: Listener) {
      if (!listeners.has(type)) {
        listeners.set(type, new Set());
      }
      listeners.get(type)!.add(fn);
    },
    removeEventListener(type: string, fn: Listener) {
      listeners.get(type)?.delete(fn);
    },
    fire(type: string) {
      for (const fn of [...(listeners.get(type) ?? [])]) {
        fn();
      }
    },
    count(type: string) {
      return listeners.get(type)?.size ?? 0;
    },
  };
}
