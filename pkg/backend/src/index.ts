import { loadConfig } from './config.js';
import { createServer } from './server.js';

const config = loadConfig();
const app = createServer(config);

app.listen(config.port, config.host, () => {
  // eslint-disable-next-line no-console
  console.log(
    `scorer backend listening on http://${config.host}:${config.port} ` +
    `(nli=${config.nliModelId}, embed=${config.embedModelId}, judge=${config.judgeModelId})`,
  );
});
