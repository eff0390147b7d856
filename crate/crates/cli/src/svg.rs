//! Static bar-chart histograms.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One bar per `f(n)`, bars scaled to the largest value.
pub fn histogram(title: &str, probs: &[f64]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let base = HEIGHT - MARGIN;
    let top = probs.iter().copied().fold(0.0, f64::max);
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#,
        WIDTH - MARGIN
    );
    if !probs.is_empty() && top > 0.0 {
        let slot = plot_w / probs.len() as f64;
        let label_every = (probs.len() / 20).max(1);
        for (n, &f) in probs.iter().enumerate() {
            let h = plot_h * f / top;
            let x = MARGIN + slot * n as f64;
            let _ = writeln!(
                out,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="#4a6fa5"><title>f({n}) = {f:.6e}</title></rect>"##,
                x + 0.1 * slot,
                base - h,
                0.8 * slot
            );
            if n % label_every == 0 {
                let _ = writeln!(
                    out,
                    r#"<text x="{:.2}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="10">{n}</text>"#,
                    x + 0.5 * slot,
                    base + 14.0
                );
            }
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10">{top:.4}</text>"#,
            4.0,
            MARGIN + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_bar_per_value() {
        let svg = histogram("a < b", &[0.5, 0.25, 0.25]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<title>").count(), 3);
        assert!(svg.contains("a &lt; b"));
    }

    #[test]
    fn empty_input() {
        let svg = histogram("x", &[]);
        assert!(!svg.contains("<title>"));
    }
}
