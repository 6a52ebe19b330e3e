use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{bucket_of, BUCKET_BOUNDS};
use crate::error::{Error, Result};
use crate::scoring::DistributionStats;

const COLORS: [&str; 4] = ["#aef0a0", "#fbe58c", "#f7a8a8", "#d5b8f2"];
const LABELS: [&str; 4] = ["rank 1-10", "rank 11-100", "rank 101-1000", "rank > 1000"];

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(ch),
        }
    }
    out
}

/// Renders a static page coloring every token by its rank bucket.
pub fn render_html_report(title: &str, tokens: &[String], stats: &[DistributionStats]) -> Result<String> {
    if stats.is_empty() {
        return Err(Error::EmptyInput);
    }
    if tokens.len() != stats.len() {
        return Err(Error::LengthMismatch {
            left: tokens.len(),
            right: stats.len(),
        });
    }
    let mut counts = [0usize; 4];
    let mut body = String::new();
    for (tok, s) in tokens.iter().zip(stats) {
        let b = bucket_of(s.r);
        counts[b] += 1;
        let _ = write!(
            body,
            "<span class=\"tok b{b}\" title=\"p={:.6} r={} c={:.6} e={:.4}\">{}</span>",
            s.p,
            s.r,
            s.c,
            s.e,
            escape(tok)
        );
    }

    let mut legend = String::new();
    let mut hist = String::new();
    let total = stats.len() as f64;
    for b in 0..4 {
        let _ = write!(legend, "<li><span class=\"sw b{b}\"></span>{}</li>", LABELS[b]);
        let pct = 100.0 * counts[b] as f64 / total;
        let _ = write!(
            hist,
            "<tr><td>{}</td><td class=\"n\">{}</td><td><div class=\"bar b{b}\" style=\"width:{pct:.1}%\"></div></td></tr>",
            LABELS[b], counts[b]
        );
    }

    let mut css = String::new();
    for (b, c) in COLORS.iter().enumerate() {
        let _ = write!(css, ".b{b}{{background:{c}}}");
    }

    Ok(format!(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{title}</title>\n\
<style>body{{font-family:sans-serif;max-width:60em;margin:2em auto}}\
.text{{font-family:monospace;white-space:pre-wrap;line-height:1.6}}\
.tok{{border-radius:2px}}.sw{{display:inline-block;width:1em;height:1em;margin-right:.4em;vertical-align:middle}}\
ul.legend{{list-style:none;padding:0;display:flex;gap:1.5em}}\
table{{border-collapse:collapse}}td{{padding:.2em .6em}}td.n{{text-align:right}}\
.bar{{height:1em;min-width:1px}}{css}</style>\n</head>\n<body>\n\
<h1>{title}</h1>\n<ul class=\"legend\">{legend}</ul>\n\
<h2>Rank histogram ({n} tokens; bucket bounds {bounds:?})</h2>\n<table>{hist}</table>\n\
<h2>Tokens</h2>\n<div class=\"text\">{body}</div>\n</body>\n</html>\n",
        title = escape(title),
        n = stats.len(),
        bounds = BUCKET_BOUNDS,
    ))
}

pub fn emit_html_report(
    title: &str,
    tokens: &[String],
    stats: &[DistributionStats],
    path: impl AsRef<Path>,
) -> Result<()> {
    let html = render_html_report(title, tokens, stats)?;
    fs::write(path, html)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(ranks: &[u32]) -> Vec<DistributionStats> {
        ranks
            .iter()
            .enumerate()
            .map(|(i, &r)| DistributionStats {
                position: i as u32 + 1,
                token_id: 0,
                p: 0.1,
                r,
                c: if r == 1 { 0.0 } else { 0.5 },
                e: 1.0,
            })
            .collect()
    }

    #[test]
    fn one_span_per_token() {
        let ranks: Vec<u32> = (0..150).map(|i| [1, 20, 500, 5000][i % 4]).collect();
        let toks: Vec<String> = (0..150).map(|i| format!("t{i}")).collect();
        let html = render_html_report("doc", &toks, &stats(&ranks)).unwrap();
        assert_eq!(html.matches("<span class=\"tok ").count(), 150);
    }

    #[test]
    fn all_rank_one_uses_first_color() {
        let toks = vec!["a".to_string(); 20];
        let html = render_html_report("doc", &toks, &stats(&[1; 20])).unwrap();
        assert_eq!(html.matches("<span class=\"tok b0\"").count(), 20);
        assert_eq!(html.matches("<span class=\"tok b").count(), 20);
    }

    #[test]
    fn errors_and_escaping() {
        assert!(render_html_report("x", &[], &[]).is_err());
        assert!(render_html_report("x", &["a".into()], &stats(&[1, 2])).is_err());
        let html = render_html_report("x", &["<b>".into()], &stats(&[3])).unwrap();
        assert!(html.contains("&lt;b&gt;"));
    }
}
