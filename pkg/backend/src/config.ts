export interface BackendConfig {
  port: number;
  host: string;
  nliModelId: string;
  embedModelId: string;
  judgeModelId: string;
  tokenizerId: string;
  maxSequenceTokens: number;
  version: string;
  /** Optional bearer token; when set, every request must carry it. */
  authToken?: string;
  /** Optional chat-completions endpoint the judge proxies to. */
  judgeProxyUrl?: string;
  judgeProxyModel?: string;
}

export function loadConfig(env: NodeJS.ProcessEnv = process.env): BackendConfig {
  return {
    port: Number(env.BACKEND_PORT ?? 8400),
    host: env.BACKEND_HOST ?? '127.0.0.1',
    nliModelId: env.NLI_MODEL_ID ?? 'lexical-nli-v1',
    embedModelId: env.EMBED_MODEL_ID ?? 'hashed-ngram-embed-256',
    judgeModelId: env.JUDGE_MODEL_ID ?? (env.JUDGE_PROXY_URL ? 'judge-proxy' : 'lexical-judge-v1'),
    tokenizerId: env.TOKENIZER_ID ?? 'whitespace-v1',
    maxSequenceTokens: Number(env.MAX_SEQUENCE_TOKENS ?? 512),
    version: '0.1.0',
    authToken: env.BACKEND_TOKEN || undefined,
    judgeProxyUrl: env.JUDGE_PROXY_URL || undefined,
    judgeProxyModel: env.JUDGE_PROXY_MODEL || undefined,
  };
}
