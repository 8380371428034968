use super::datum::Datum;

/// Canonical single-line form: one space between items, no trailing
/// whitespace, `quote` spelled out. `parse_datum` inverts it.
pub fn print_datum(d: &Datum) -> String {
    let mut out = String::new();
    write_datum(&mut out, d);
    out
}

fn write_datum(out: &mut String, d: &Datum) {
    match d {
        Datum::Atom(a) => out.push_str(a),
        Datum::Num(n) => out.push_str(&n.to_string()),
        Datum::Str(s) => {
            out.push('"');
            for c in s.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    c => out.push(c),
                }
            }
            out.push('"');
        }
        Datum::List(l) => {
            out.push('(');
            for (i, item) in l.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write_datum(out, item);
            }
            out.push(')');
        }
    }
}

/// Program-file layout: the canonical form, except that a top-level
/// `(program ...)` puts each definition on its own line. Still a fixed
/// function of the datum, so it is byte-stable.
pub fn print_program_text(d: &Datum) -> String {
    let Some(items) = d.as_list() else {
        return print_datum(d) + "\n";
    };
    if !items.head().is_some_and(|h| h.is_atom("program")) {
        return print_datum(d) + "\n";
    }
    let mut out = String::from("(program");
    for def in items.iter().skip(1) {
        out.push_str("\n  ");
        out.push_str(&print_datum(def));
    }
    out.push_str(")\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lcore::parse::parse_datum;

    #[test]
    fn canonical_spacing() {
        let d = parse_datum("(  a\n   1  ( ) )").unwrap();
        assert_eq!(print_datum(&d), "(a 1 ())");
        assert_eq!(print_datum(&Datum::nil()), "()");
    }

    #[test]
    fn program_text_reparses() {
        let d = parse_datum("(program (def id (x) x) (def k (x y) 'x))").unwrap();
        let text = print_program_text(&d);
        assert_eq!(text, "(program\n  (def id (x) x)\n  (def k (x y) (quote x)))\n");
        assert_eq!(parse_datum(&text).unwrap(), d);
    }
}
