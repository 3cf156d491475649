/** Live syntax check for recommendation templates.
 *
 * Mirrors the service's grammar: @ALIAS tokens, [@A, @B]:n occurrence
 * groups, @ALIAS.listColumns("PREDICATE"|"INPUT") helper calls, and @@ as
 * the escape for a literal @.  Unknown aliases are flagged against the
 * pattern's returned aliases before anything is submitted.
 */

export interface TemplateProblem {
  position: number;
  message: string;
}

const IDENT = /^[A-Za-z_][A-Za-z0-9_]*/;
const HELPER_FUNCTIONS = new Set(['listColumns']);
const CALL_MODES = new Set(['PREDICATE', 'INPUT']);

export function checkTemplate(text: string, knownAliases: string[]): TemplateProblem[] {
  const problems: TemplateProblem[] = [];
  const known = new Set(knownAliases);
  let pos = 0;

  const readToken = (): string | null => {
    // caller guarantees text[pos] === '@'
    const match = IDENT.exec(text.slice(pos + 1));
    if (!match) {
      problems.push({ position: pos, message: "'@' without an alias name" });
      pos += 1;
      return null;
    }
    const alias = match[0];
    pos += 1 + alias.length;
    if (!known.has(alias)) {
      problems.push({
        position: pos - alias.length - 1,
        message: `@${alias} names no returned node (have: ${[...known].sort().join(', ') || 'none'})`,
      });
    }
    return alias;
  };

  while (pos < text.length) {
    const ch = text[pos];
    if (ch === '@') {
      if (text.startsWith('@@', pos)) {
        pos += 2;
        continue;
      }
      const start = pos;
      if (readToken() === null) continue;
      const callMatch = /^\.([A-Za-z_][A-Za-z0-9_]*)\(/.exec(text.slice(pos));
      if (callMatch) {
        const fn = callMatch[1];
        if (!HELPER_FUNCTIONS.has(fn)) {
          problems.push({ position: pos, message: `unknown helper function ${fn}` });
          pos += callMatch[0].length;
          continue;
        }
        const rest = /^"([A-Z]+)"\)/.exec(text.slice(pos + callMatch[0].length));
        if (!rest) {
          problems.push({
            position: start,
            message: 'malformed helper call, expected @ALIAS.listColumns("PREDICATE") or ("INPUT")',
          });
          pos += callMatch[0].length;
          continue;
        }
        if (!CALL_MODES.has(rest[1])) {
          problems.push({ position: pos, message: `unknown mode ${rest[1]}` });
        }
        pos += callMatch[0].length + rest[0].length;
      }
      continue;
    }
    if (ch === '[' && /^\[\s*@/.test(text.slice(pos))) {
      pos += 1;
      for (;;) {
        while (pos < text.length && (text[pos] === ' ' || text[pos] === '\t')) pos += 1;
        if (text[pos] !== '@') {
          problems.push({ position: pos, message: 'group entries must be @ALIAS tokens' });
          return problems;
        }
        readToken();
        while (pos < text.length && (text[pos] === ' ' || text[pos] === '\t')) pos += 1;
        if (text[pos] === ',') {
          pos += 1;
          continue;
        }
        if (text[pos] === ']') {
          pos += 1;
          break;
        }
        problems.push({ position: pos, message: "unterminated group, expected ',' or ']'" });
        return problems;
      }
      if (text[pos] === ':') {
        const cap = /^:(\d+)/.exec(text.slice(pos));
        if (!cap) {
          problems.push({ position: pos, message: 'occurrence cap must be an integer' });
        } else {
          if (Number(cap[1]) < 1) {
            problems.push({ position: pos, message: 'occurrence cap must be >= 1' });
          }
          pos += cap[0].length;
          continue;
        }
        pos += 1;
      }
      continue;
    }
    pos += 1;
  }
  return problems;
}
