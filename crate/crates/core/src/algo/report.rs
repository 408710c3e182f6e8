use std::io::Write;

use crate::error::Result;

pub const LOSS_CSV_HEADER: &str = "step,actor_loss,critic_loss,mean_q,sigma_p,gaussian,param,none,ou,sticky";

/// One row of the append-only loss log.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossRow {
    pub step: u64,
    /// Empty in the file when the actor was not updated.
    pub actor_loss: Option<f64>,
    pub critic_loss: f64,
    pub mean_q: f64,
    pub sigma_p: f64,
    /// Episodes started per exploration mode: gaussian, param, none, ou, sticky.
    pub mode_counts: [u64; 5],
}

impl LossRow {
    pub fn to_csv(&self) -> String {
        let actor = self.actor_loss.map_or(String::new(), |a| format!("{a}"));
        let c = self.mode_counts;
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.step, actor, self.critic_loss, self.mean_q, self.sigma_p, c[0], c[1], c[2], c[3], c[4]
        )
    }
}

pub struct LossCsv<W: Write> {
    out: W,
}

impl<W: Write> LossCsv<W> {
    /// Writes the header unless `append` is set.
    pub fn new(mut out: W, append: bool) -> Result<Self> {
        if !append {
            writeln!(out, "{LOSS_CSV_HEADER}")?;
        }
        Ok(LossCsv { out })
    }

    pub fn write(&mut self, row: &LossRow) -> Result<()> {
        writeln!(self.out, "{}", row.to_csv())?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}
