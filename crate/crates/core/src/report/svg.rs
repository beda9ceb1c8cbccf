use std::fmt::Write as _;

use super::CoclusterReport;

#[derive(Clone, Copy, Debug)]
pub struct HeatmapOptions {
    pub cell_size: u32,
    /// Print the observation count inside each cell.
    pub show_counts: bool,
}

impl Default for HeatmapOptions {
    fn default() -> Self {
        HeatmapOptions {
            cell_size: 48,
            show_counts: true,
        }
    }
}

/// Diverging fill: white at 0, pure red at `+scale`, pure blue at `-scale`.
fn fill(value: f64, scale: f64, empty: bool) -> String {
    if empty || scale <= 0.0 || value == 0.0 {
        return "#ffffff".to_string();
    }
    let t = (value.abs() / scale).min(1.0);
    let fade = (255.0 * (1.0 - t)).round() as u8;
    if value > 0.0 {
        format!("#ff{fade:02x}{fade:02x}")
    } else {
        format!("#{fade:02x}{fade:02x}ff")
    }
}

/// SVG 1.1 heatmap of the mutual-information matrix, one rectangle per cell.
pub fn render_heatmap_svg(report: &CoclusterReport, options: &HeatmapOptions) -> String {
    let (rows, cols) = (report.n_instance_clusters(), report.n_part_clusters());
    let s = options.cell_size;
    let margin = 40;
    let width = margin + cols as u32 * s + 10;
    let height = margin + rows as u32 * s + 10;
    let mi = &report.mutual_information;
    let scale = mi.scale();
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(out, r#"<g font-family="sans-serif" font-size="11" text-anchor="middle">"#);
    for c in 0..cols {
        let x = margin + c as u32 * s + s / 2;
        let _ = writeln!(out, r#"<text x="{x}" y="{}">P{c}</text>"#, margin - 8);
    }
    for r in 0..rows {
        let y = margin + r as u32 * s + s / 2 + 4;
        let _ = writeln!(out, r#"<text x="{}" y="{y}">I{r}</text>"#, margin / 2);
    }
    for r in 0..rows {
        for c in 0..cols {
            let x = margin + c as u32 * s;
            let y = margin + r as u32 * s;
            let color = fill(mi.values[r][c], scale, mi.empty[r][c]);
            let _ = writeln!(
                out,
                r##"<rect x="{x}" y="{y}" width="{s}" height="{s}" fill="{color}" stroke="#808080" stroke-width="1"/>"##
            );
            if options.show_counts {
                let _ = writeln!(
                    out,
                    r#"<text x="{}" y="{}">{}</text>"#,
                    x + s / 2,
                    y + s / 2 + 4,
                    report.cells[r][c]
                );
            }
        }
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, "</svg>");
    out
}

#[cfg(test)]
mod tests {
    use super::fill;

    #[test]
    fn colour_scale() {
        assert_eq!(fill(1.0, 1.0, false), "#ff0000");
        assert_eq!(fill(-1.0, 1.0, false), "#0000ff");
        assert_eq!(fill(0.0, 1.0, false), "#ffffff");
        assert_eq!(fill(0.3, 0.0, false), "#ffffff");
        assert_eq!(fill(0.5, 1.0, true), "#ffffff");
        assert_eq!(fill(0.5, 1.0, false), "#ff8080");
    }
}
