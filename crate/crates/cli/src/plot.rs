//! Attention-versus-dihedral plots as standalone SVG.

use std::fmt::Write;

use confmil::evalsuite::AttentionRow;
use confmil::provenance::Provenance;

pub const SUMMARY_COLUMNS: [&str; 9] = [
    "bag_id",
    "bag_label",
    "predicted_prob",
    "n_conformers",
    "argmax_conformer",
    "argmax_dihedral_deg",
    "argmax_alpha",
    "key_conformers",
    "top1_hit",
];

#[derive(Debug, Clone, PartialEq)]
pub struct BagSummary {
    pub bag_id: usize,
    pub bag_label: bool,
    pub predicted_prob: f64,
    pub n_conformers: usize,
    pub argmax_conformer: usize,
    pub argmax_dihedral_deg: f64,
    pub argmax_alpha: f64,
    pub key_conformers: usize,
    pub top1_hit: bool,
}

impl BagSummary {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.bag_id,
            u8::from(self.bag_label),
            self.predicted_prob,
            self.n_conformers,
            self.argmax_conformer,
            self.argmax_dihedral_deg,
            self.argmax_alpha,
            self.key_conformers,
            u8::from(self.top1_hit)
        )
    }
}

const WIDTH: f64 = 560.0;
const HEIGHT: f64 = 340.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One bag: α against the motif dihedral. Key instances get a red ring,
/// the highest-α conformer a filled blue diamond.
pub fn bag_svg(rows: &[AttentionRow], summary: &BagSummary, prov: &Provenance) -> String {
    let y_max = rows.iter().map(|r| r.alpha).fold(0.0, f64::max).max(1e-12) * 1.1;
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let x = |deg: f64| LEFT + (deg + 180.0) / 360.0 * pw;
    let y = |a: f64| TOP + ph - a / y_max * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, "<metadata>{}</metadata>", escape(prov.comment_block().trim_end()));
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">bag {} (label {}, p = {:.3})</text>"#,
        WIDTH / 2.0,
        summary.bag_id,
        u8::from(summary.bag_label),
        summary.predicted_prob
    );
    // axes
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT} {TOP} V{} H{}" fill="none" stroke="black"/>"#,
        TOP + ph,
        LEFT + pw
    );
    for deg in [-180.0, -90.0, 0.0, 90.0, 180.0] {
        let xx = x(deg);
        let _ = writeln!(
            s,
            r#"<line x1="{xx}" y1="{}" x2="{xx}" y2="{}" stroke="black"/><text x="{xx}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{deg}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0
        );
    }
    for frac in [0.0, 0.5, 1.0] {
        let a = frac * y_max / 1.1;
        let yy = y(a);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{yy}" x2="{LEFT}" y2="{yy}" stroke="black"/><text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{a:.3}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            yy + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">N-C-C-N dihedral (deg)</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">attention</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    for r in rows {
        let (cx, cy) = (x(r.dihedral_deg), y(r.alpha));
        let _ = writeln!(
            s,
            r#"<line x1="{cx}" y1="{}" x2="{cx}" y2="{cy}" stroke="gray" stroke-width="1"/><circle cx="{cx}" cy="{cy}" r="3" fill="gray"/>"#,
            TOP + ph
        );
        if r.instance_label {
            let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="8" fill="none" stroke="red" stroke-width="2"/>"#);
        }
        if r.conformer_id == summary.argmax_conformer {
            let _ = writeln!(
                s,
                r#"<path d="M{cx} {} L{} {cy} L{cx} {} L{} {cy} Z" fill="blue"/>"#,
                cy - 6.0,
                cx + 6.0,
                cy + 6.0,
                cx - 6.0
            );
        }
    }
    // legend
    let lx = LEFT + pw - 150.0;
    let _ = writeln!(
        s,
        r#"<circle cx="{lx}" cy="{}" r="6" fill="none" stroke="red" stroke-width="2"/><text x="{}" y="{}" font-family="sans-serif" font-size="11">key instance</text>"#,
        TOP + 8.0,
        lx + 12.0,
        TOP + 12.0
    );
    let _ = writeln!(
        s,
        r#"<path d="M{lx} {} L{} {} L{lx} {} L{} {} Z" fill="blue"/><text x="{}" y="{}" font-family="sans-serif" font-size="11">highest attention</text>"#,
        TOP + 20.0,
        lx + 6.0,
        TOP + 26.0,
        TOP + 32.0,
        lx - 6.0,
        TOP + 26.0,
        lx + 12.0,
        TOP + 30.0
    );
    s.push_str("</svg>\n");
    s
}
