/**
 * Scorer wire protocol over HTTP.
 *
 * Endpoints (JSON, UTF-8): POST /v1/nli, /v1/embed, /v1/judge, /v1/tokenize
 * and GET /v1/manifest. Every response echoes request ids so clients can
 * re-associate results regardless of ordering; scoring is pure, so results
 * are independent of how requests are batched. Inputs longer than the
 * sequence limit are rejected with 422: truncation is the client's job and
 * silently clipping here would corrupt scores.
 */

import express, { Express, NextFunction, Request, Response } from 'express';
import { z } from 'zod';

import { BackendConfig, loadConfig } from './config.js';
import {
  EMBEDDING_DIMENSION,
  embedText,
  extractVerdict,
  judgeLocal,
  renderJudgePrompt,
  scoreNli,
  tokenize,
} from './models.js';

const nliRequestSchema = z.object({
  pairs: z.array(z.object({
    id: z.string(),
    premise: z.string(),
    hypothesis: z.string(),
  })),
});

const embedRequestSchema = z.object({
  texts: z.array(z.object({ id: z.string(), text: z.string() })),
});

const judgeRequestSchema = z.object({
  id: z.string(),
  candidate: z.string(),
  references: z.array(z.string()).min(1),
});

const tokenizeRequestSchema = z.object({
  texts: z.array(z.object({ id: z.string(), text: z.string() })),
});

export function createServer(config: BackendConfig = loadConfig()): Express {
  const app = express();
  app.use(express.json({ limit: '16mb' }));

  if (config.authToken) {
    app.use((req: Request, res: Response, next: NextFunction) => {
      if (req.headers.authorization !== `Bearer ${config.authToken}`) {
        res.status(401).json({ error: 'missing or invalid bearer token' });
        return;
      }
      next();
    });
  }

  app.get('/healthz', (_req, res) => {
    res.json({ status: 'ok' });
  });

  app.get('/v1/manifest', (_req, res) => {
    res.json({
      nli_model_id: config.nliModelId,
      embed_model_id: config.embedModelId,
      judge_model_id: config.judgeModelId,
      tokenizer_id: config.tokenizerId,
      max_sequence_tokens: config.maxSequenceTokens,
      version: config.version,
    });
  });

  app.post('/v1/nli', (req, res) => {
    const parsed = nliRequestSchema.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({ error: parsed.error.message });
      return;
    }
    for (const pair of parsed.data.pairs) {
      const total = tokenize(pair.premise).length + tokenize(pair.hypothesis).length;
      if (total > config.maxSequenceTokens) {
        res.status(422).json({
          error: `pair ${pair.id} has ${total} tokens, limit is ` +
            `${config.maxSequenceTokens}; truncate client-side first`,
        });
        return;
      }
    }
    res.json({
      results: parsed.data.pairs.map((pair) => ({
        id: pair.id,
        ...scoreNli(pair.premise, pair.hypothesis),
      })),
    });
  });

  app.post('/v1/embed', (req, res) => {
    const parsed = embedRequestSchema.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({ error: parsed.error.message });
      return;
    }
    res.json({
      dimension: EMBEDDING_DIMENSION,
      results: parsed.data.texts.map((item) => ({
        id: item.id,
        embedding: embedText(item.text),
      })),
    });
  });

  app.post('/v1/judge', async (req, res) => {
    const parsed = judgeRequestSchema.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({ error: parsed.error.message });
      return;
    }
    const { id, candidate, references } = parsed.data;
    try {
      const verdict = config.judgeProxyUrl
        ? await judgeViaProxy(config, candidate, references)
        : judgeLocal(candidate, references);
      res.json({ id, verdict });
    } catch (error) {
      res.status(502).json({ error: `judge proxy failed: ${String(error)}` });
    }
  });

  app.post('/v1/tokenize', (req, res) => {
    const parsed = tokenizeRequestSchema.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({ error: parsed.error.message });
      return;
    }
    res.json({
      results: parsed.data.texts.map((item) => {
        const spans = tokenize(item.text);
        return {
          id: item.id,
          count: spans.length,
          offsets: spans.map((s) => [s.start, s.end]),
        };
      }),
    });
  });

  return app;
}

async function judgeViaProxy(
  config: BackendConfig,
  candidate: string,
  references: string[],
): Promise<'TRUE' | 'FALSE'> {
  const prompt = renderJudgePrompt(candidate, references);
  const response = await fetch(config.judgeProxyUrl as string, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify({
      model: config.judgeProxyModel ?? 'default',
      messages: [{ role: 'user', content: prompt }],
      temperature: 0,
    }),
  });
  if (!response.ok) {
    throw new Error(`upstream returned ${response.status}`);
  }
  const body = (await response.json()) as {
    choices?: { message?: { content?: string } }[];
  };
  const reply = body.choices?.[0]?.message?.content ?? '';
  const verdict = extractVerdict(reply);
  if (!verdict) {
    throw new Error(`no TRUE/FALSE token in judge reply: ${reply.slice(0, 120)}`);
  }
  return verdict;
}
