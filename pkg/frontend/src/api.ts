/** Typed client for the review service. One fetch per call, no retries:
 * a 409 means another moderator got there first and the caller decides
 * what to do about it. */

export interface ApiConfig {
  baseUrl: string;
  token: string | null;
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
  }
}

export interface TrendRecord {
  date: string;
  rank: number;
  cluster_id: string;
  canonical: string;
  a: number;
  cluster_total: number;
  day_total: number;
  corpus_total: number;
  p: number;
  z: number;
  novel: boolean;
}

export interface TrendsPage {
  date: string | null;
  total: number;
  records: TrendRecord[];
}

export interface ClaimExample {
  post_id: string;
  text: string;
}

export interface PendingClaim {
  cluster_id: string;
  canonical: string;
  flag_date: string;
  first_seen: string | null;
  post_count: number;
  p: number | null;
  z: number | null;
  rank: number | null;
  required: number;
  decisions_so_far: number;
  examples: ClaimExample[];
}

export interface PendingPage {
  total: number;
  claims: PendingClaim[];
}

export interface DecisionBody {
  annotator_id: string;
  category: string;
  debunk_date?: string | null;
  debunk_url?: string | null;
  elapsed_seconds?: number;
}

export interface DecisionResult {
  cluster_id: string;
  category: string;
  spawned: string[];
}

export interface SampleTweet {
  post_id: string;
  text: string;
  reviewed: boolean;
  likert: number | null;
  is_duplicate: boolean;
}

export interface TweetSample {
  cluster_id: string;
  total: number;
  tweets: SampleTweet[];
}

export interface ReviewBody {
  cluster_id: string;
  annotator_id: string;
  likert?: number | null;
  is_duplicate?: boolean;
  elapsed_seconds?: number;
}

export interface ReviewResult {
  post_id: string;
  cluster_id: string;
  is_violation: boolean;
}

export interface Guidelines {
  version: string;
  likert: Record<string, string>;
  stage1_categories: Record<string, string>;
}

export interface SeriesPoint {
  date: string;
  potential: number;
  actual: number;
}

export interface TopKShare {
  pct: number;
  considered: number;
  truncated: boolean;
}

export interface MetricsReport {
  config: Record<string, unknown>;
  counts: {
    posts: number;
    mentions: number;
    clusters: number;
    days: number;
    flagged: number;
    decisions: number;
    reviews: number;
    violations: number;
  };
  delta_days: Record<string, number>;
  median_delta: number | null;
  pct_unapproved_topk: Record<string, TopKShare>;
  violations_per_hour: number | null;
  annotation_hours: number;
  likert_distribution: Record<string, number> | null;
  agreement: {
    cohen_kappa: number | null;
    krippendorff_alpha: number | null;
  };
  cumulative_trends: SeriesPoint[];
}

export interface EventRecord {
  seq: number;
  at: string;
  kind: string;
  payload: Record<string, unknown>;
}

export interface EventsPage {
  total: number;
  events: EventRecord[];
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class Client {
  constructor(
    private readonly config: ApiConfig,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (this.config.token) {
      headers["Authorization"] = `Bearer ${this.config.token}`;
    }
    const init: RequestInit = { method, headers };
    if (body !== undefined) {
      headers["Content-Type"] = "application/json";
      init.body = JSON.stringify(body);
    }
    const base = this.config.baseUrl.replace(/\/+$/, "");
    const res = await this.fetchFn(base + path, init);
    if (!res.ok) {
      let detail = `HTTP ${res.status}`;
      try {
        const parsed = (await res.json()) as { detail?: unknown };
        if (parsed && parsed.detail !== undefined) {
          detail = typeof parsed.detail === "string" ? parsed.detail : JSON.stringify(parsed.detail);
        }
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  healthz(): Promise<{ ok: boolean; events: number }> {
    return this.request("GET", "/healthz");
  }

  guidelines(): Promise<Guidelines> {
    return this.request("GET", "/guidelines");
  }

  trends(params: { date?: string; top?: number; limit?: number; offset?: number } = {}): Promise<TrendsPage> {
    const query = new URLSearchParams();
    if (params.date !== undefined) query.set("date", params.date);
    if (params.top !== undefined) query.set("top", String(params.top));
    if (params.limit !== undefined) query.set("limit", String(params.limit));
    if (params.offset !== undefined) query.set("offset", String(params.offset));
    const suffix = query.toString();
    return this.request("GET", suffix ? `/trends?${suffix}` : "/trends");
  }

  pendingClaims(): Promise<PendingPage> {
    return this.request("GET", "/claims/pending");
  }

  decideClaim(clusterId: string, body: DecisionBody): Promise<DecisionResult> {
    return this.request("POST", `/claims/${encodeURIComponent(clusterId)}/decision`, body);
  }

  tweetSample(clusterId: string): Promise<TweetSample> {
    return this.request("GET", `/claims/${encodeURIComponent(clusterId)}/tweets/sample`);
  }

  reviewTweet(postId: string, body: ReviewBody): Promise<ReviewResult> {
    return this.request("POST", `/tweets/${encodeURIComponent(postId)}/review`, body);
  }

  metricsReport(): Promise<MetricsReport> {
    return this.request("GET", "/metrics/report");
  }

  exportEvents(afterSeq = 0): Promise<EventsPage> {
    return this.request("GET", `/export/events?after_seq=${afterSeq}`);
  }
}
