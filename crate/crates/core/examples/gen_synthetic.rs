//! Regenerates `data/students_synthetic.csv`.
//!
//! ```text
//! cargo run -p gradecast-core --example gen_synthetic > crates/core/data/students_synthetic.csv
//! ```

use gradecast::synth::{generate_csv, SynthConfig};

fn main() {
    print!(
        "{}",
        generate_csv(&SynthConfig::default()).expect("default config is consistent")
    );
}
