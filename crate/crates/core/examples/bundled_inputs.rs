//! Regenerates the files under `data/` from the built-in desk-scale case.
//!
//!     cargo run --example bundled_inputs [-- <dir>]

use std::path::PathBuf;

use chrono::NaiveDate;
use qsts::cases::desk30;
use qsts::ess::{PeakCalendar, PeakWindow};
use qsts::network::{to_toml, GeneratorKind};
use qsts::profiles::synthetic::{self, SyntheticSpec};
use qsts::profiles::{write_profiles, TimeSeriesDataset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"));
    std::fs::create_dir_all(&dir)?;
    let model = desk30();
    std::fs::write(dir.join("network.toml"), to_toml(&model))?;

    let start = NaiveDate::from_ymd_opt(2035, 1, 8).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let week = synthetic::generate(
        &model,
        &SyntheticSpec {
            start,
            days: 7,
            ..Default::default()
        },
    );
    write_profiles(&week, &dir.join("profiles-week.csv"))?;

    // one quiet hour followed by a demand jump and a wind collapse
    let mut stress = synthetic::constant(&model, start, 60, 2);
    for l in &model.loads {
        stress.series.get_mut(&l.id).unwrap()[1] = 1.25 * l.p_mw;
    }
    for g in model.generators.iter().filter(|g| g.kind == GeneratorKind::Wind) {
        let col = stress.series.get_mut(&g.id).unwrap();
        col[0] = 0.8 * g.p_max;
        col[1] = 0.1 * g.p_max;
    }
    write_profiles(&stress, &dir.join("stress-step.csv"))?;

    let mut sample = TimeSeriesDataset::new(60, start, "limits sample");
    sample.series.insert("Z".into(), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    write_profiles(&sample, &dir.join("limits-sample.csv"))?;

    let peaks = PeakCalendar::new(vec![
        PeakWindow {
            start_minute: 6 * 60,
            end_minute: 9 * 60,
        },
        PeakWindow {
            start_minute: 16 * 60,
            end_minute: 20 * 60,
        },
    ])?;
    std::fs::write(dir.join("peaks.toml"), toml::to_string(&peaks)?)?;
    println!("wrote bundled inputs to {}", dir.display());
    Ok(())
}
