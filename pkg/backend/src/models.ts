/**
 * Scoring models behind the wire protocol.
 *
 * The default implementations are deterministic lexical models so the
 * service runs self-contained: an overlap/negation entailment scorer, a
 * hashed character-n-gram embedder, a whitespace tokenizer and a
 * similarity-based judge. Each implements the exact contract the engine
 * expects (probability triples summing to 1, unit-norm vectors, character
 * offsets), and the judge can proxy to any chat-completions endpoint when
 * a real LLM is available.
 */

export interface NliTriple {
  entail: number;
  neutral: number;
  contradict: number;
}

export interface TokenSpan {
  start: number;
  end: number;
}

const NEGATIONS = new Set([
  'not', 'no', 'never', 'none', 'neither', 'nor', 'without',
  'denies', 'denied', 'absent', 'cannot', 'lacks', 'excludes',
]);

export function normalizeText(text: string): string {
  return text.toLowerCase().replace(/\s+/g, ' ').trim();
}

function contentTokens(text: string): { tokens: string[]; negations: number } {
  const raw = normalizeText(text)
    .split(' ')
    .map((t) => t.replace(/^[^\p{L}\p{N}]+|[^\p{L}\p{N}]+$/gu, ''))
    .filter((t) => t.length > 0);
  const tokens: string[] = [];
  let negations = 0;
  for (const token of raw) {
    if (NEGATIONS.has(token)) {
      negations += 1;
    } else {
      tokens.push(token);
    }
  }
  return { tokens, negations };
}

/**
 * Entail/neutral/contradict from lexical coverage of the hypothesis by the
 * premise, with polarity flips detected through unbalanced negation. An
 * identical pair always lands on entailment; disjoint texts on neutral.
 */
export function scoreNli(premise: string, hypothesis: string): NliTriple {
  const p = contentTokens(premise);
  const h = contentTokens(hypothesis);
  if (h.tokens.length === 0) {
    return { entail: 0.1, neutral: 0.8, contradict: 0.1 };
  }
  const premiseSet = new Set(p.tokens);
  const overlap = h.tokens.filter((t) => premiseSet.has(t)).length;
  const coverage = overlap / h.tokens.length;
  const polarityFlip = p.negations % 2 !== h.negations % 2;

  let entail: number;
  let contradict: number;
  if (polarityFlip) {
    // Same claim under opposite polarity: the stronger the lexical match,
    // the stronger the contradiction.
    contradict = 0.15 + 0.75 * coverage;
    entail = 0.05 + 0.05 * (1 - coverage);
  } else {
    entail = 0.1 + 0.85 * Math.pow(coverage, 1.25);
    contradict = 0.02 + 0.05 * (1 - coverage);
  }
  const neutral = Math.max(0.02, 1 - entail - contradict);
  const total = entail + neutral + contradict;
  return { entail: entail / total, neutral: neutral / total, contradict: contradict / total };
}

function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i += 1) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash >>> 0;
}

export const EMBEDDING_DIMENSION = 256;

/**
 * Feature-hashed word + character-trigram embedding, L2-normalized.
 * Surface-similar strings land close together, which is what downstream
 * cosine thresholds need from a reference implementation.
 */
export function embedText(text: string, dimension: number = EMBEDDING_DIMENSION): number[] {
  const vector = new Array<number>(dimension).fill(0);
  const normalized = normalizeText(text);
  for (const word of normalized.split(' ').filter((w) => w.length > 0)) {
    vector[fnv1a(`w:${word}`) % dimension] += 1.0;
  }
  const padded = `#${normalized}#`;
  for (let i = 0; i + 3 <= padded.length; i += 1) {
    vector[fnv1a(`g:${padded.slice(i, i + 3)}`) % dimension] += 0.5;
  }
  let norm = Math.sqrt(vector.reduce((acc, x) => acc + x * x, 0));
  if (norm === 0) {
    vector[0] = 1.0;
    norm = 1.0;
  }
  return vector.map((x) => x / norm);
}

export function cosine(a: number[], b: number[]): number {
  let dot = 0;
  for (let i = 0; i < a.length; i += 1) dot += a[i] * b[i];
  return dot;
}

/** Whitespace tokens with [start, end) character offsets. */
export function tokenize(text: string): TokenSpan[] {
  const spans: TokenSpan[] = [];
  const pattern = /\S+/g;
  let match: RegExpExecArray | null;
  while ((match = pattern.exec(text)) !== null) {
    spans.push({ start: match.index, end: match.index + match[0].length });
  }
  return spans;
}

export const JUDGE_SIMILARITY_THRESHOLD = 0.9;

/**
 * Local judge: TRUE when the candidate names the same thing as any
 * reference, decided by normalized equality or embedding cosine.
 */
export function judgeLocal(candidate: string, references: string[]): 'TRUE' | 'FALSE' {
  const candNorm = normalizeText(candidate);
  const candVec = embedText(candidate);
  for (const reference of references) {
    if (normalizeText(reference) === candNorm) return 'TRUE';
    if (cosine(candVec, embedText(reference)) >= JUDGE_SIMILARITY_THRESHOLD) return 'TRUE';
  }
  return 'FALSE';
}

/** Prompt rendered when proxying the judge to a chat-completions endpoint. */
export function renderJudgePrompt(candidate: string, references: string[]): string {
  const listed = references.map((r) => `- ${r}`).join('\n');
  return [
    'You are evaluating the diagnosis prediction of a clinical model.',
    '',
    `CANDIDATE ANSWER: "${candidate}"`,
    '',
    'ACCEPTED GROUND TRUTHS:',
    listed,
    '',
    'TASK: Does the CANDIDATE ANSWER semantically match ANY of the ACCEPTED GROUND TRUTHS?',
    "Respond `TRUE' if the candidate refers to the same underlying clinical concept as any item in the list (allowing for synonyms, abbreviations, or minor wording differences).",
    "Respond `FALSE' if it represents a different clinical concept, severity, or anatomical location.",
    '',
    'Verdict:',
  ].join('\n');
}

/** First TRUE/FALSE token in a model reply; the engine only sees the verdict. */
export function extractVerdict(reply: string): 'TRUE' | 'FALSE' | null {
  const match = reply.match(/\b(true|false)\b/i);
  if (!match) return null;
  return match[1].toUpperCase() as 'TRUE' | 'FALSE';
}
