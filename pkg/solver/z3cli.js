#!/usr/bin/env node
// One-shot SMT solver command: evaluates an SMT-LIB 2 script (including the
// muZ rule/query extension) with the WebAssembly build of Z3 and prints the
// solver output on stdout.
//
// Usage: node z3cli.js [--timeout-ms N] FILE.smt2
//
// The process exits 0 whenever Z3 produced an answer (sat/unsat/unknown) and
// 1 on usage or engine errors.  Wall-clock enforcement is the caller's job;
// --timeout-ms additionally arms Z3's internal soft timeout.

const fs = require('fs');

function usage() {
  process.stderr.write('usage: z3cli.js [--timeout-ms N] FILE.smt2\n');
  process.exit(1);
}

async function main() {
  const args = process.argv.slice(2);
  let timeoutMs = 0;
  let file = null;
  for (let i = 0; i < args.length; i++) {
    if (args[i] === '--timeout-ms') {
      timeoutMs = parseInt(args[++i], 10);
      if (!Number.isFinite(timeoutMs)) usage();
    } else if (file === null) {
      file = args[i];
    } else {
      usage();
    }
  }
  if (file === null) usage();

  let script;
  try {
    script = fs.readFileSync(file, 'utf8');
  } catch (err) {
    process.stderr.write(`z3cli: cannot read ${file}: ${err.message}\n`);
    process.exit(1);
  }

  const { init } = require('z3-solver');
  const { Z3 } = await init();
  if (timeoutMs > 0) {
    Z3.global_param_set('timeout', String(timeoutMs));
  }
  const cfg = Z3.mk_config();
  const ctx = Z3.mk_context(cfg);
  try {
    const out = await Z3.eval_smtlib2_string(ctx, script);
    process.stdout.write(out);
    process.exit(0);
  } catch (err) {
    process.stderr.write(`z3cli: ${err.message}\n`);
    process.exit(1);
  }
}

main();
