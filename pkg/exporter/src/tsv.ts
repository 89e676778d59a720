/** Field escaping shared with the toolkit's TSV files.
 *
 * Literal backslash, tab, newline and carriage return become two-character
 * escapes; unescaping reverses exactly those four and leaves any other
 * backslash sequence untouched.
 */

const ESCAPES: Record<string, string> = {
  "\\": "\\\\",
  "\t": "\\t",
  "\n": "\\n",
  "\r": "\\r",
};

const UNESCAPES: Record<string, string> = {
  "\\\\": "\\",
  "\\t": "\t",
  "\\n": "\n",
  "\\r": "\r",
};

export function escapeField(value: string): string {
  return value.replace(/[\\\t\n\r]/g, (m) => ESCAPES[m] as string);
}

export function unescapeField(value: string): string {
  return value.replace(/\\[\\tnr]/g, (m) => UNESCAPES[m] as string);
}
