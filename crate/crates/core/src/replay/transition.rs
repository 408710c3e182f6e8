/// How an episode step ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DoneKind {
    #[default]
    None,
    /// True terminal: the pelvis fell below the threshold.
    Fall,
    /// Truncation by the step limit; targets still bootstrap.
    TimeLimit,
}

impl DoneKind {
    pub fn tag(self) -> u8 {
        match self {
            DoneKind::None => 0,
            DoneKind::Fall => 1,
            DoneKind::TimeLimit => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => DoneKind::None,
            1 => DoneKind::Fall,
            2 => DoneKind::TimeLimit,
            _ => return None,
        })
    }

    pub fn is_done(self) -> bool {
        self != DoneKind::None
    }

    /// Whether the successor value is cut from the target.
    pub fn is_absorbing(self) -> bool {
        self == DoneKind::Fall
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: DoneKind,
    pub priority: f64,
    /// Bit `h` set when bootstrap head `h` may learn from this transition.
    pub head_mask: u32,
}

pub const ALL_HEADS: u32 = u32::MAX;

impl Transition {
    pub fn new(obs: Vec<f64>, action: Vec<f64>, reward: f64, next_obs: Vec<f64>, done: DoneKind) -> Self {
        Transition {
            obs,
            action,
            reward,
            next_obs,
            done,
            priority: 1.0,
            head_mask: ALL_HEADS,
        }
    }

    pub fn with_head_mask(mut self, mask: u32) -> Self {
        self.head_mask = mask;
        self
    }

    pub fn head_enabled(&self, head: usize) -> bool {
        head < 32 && self.head_mask & (1 << head) != 0
    }

    /// Appends `obs, action, reward, next_obs, priority` as f64 LE then
    /// `done` as u8 and `head_mask` as u32 LE.
    pub fn write_le(&self, out: &mut Vec<u8>) {
        crate::wire::put_f64s(out, &self.obs);
        crate::wire::put_f64s(out, &self.action);
        out.extend_from_slice(&self.reward.to_le_bytes());
        crate::wire::put_f64s(out, &self.next_obs);
        out.extend_from_slice(&self.priority.to_le_bytes());
        out.push(self.done.tag());
        out.extend_from_slice(&self.head_mask.to_le_bytes());
    }

    pub(crate) fn read_le(r: &mut crate::wire::Reader<'_>, obs_dim: usize, action_dim: usize) -> crate::Result<Self> {
        let obs = r.f64_vec(obs_dim)?;
        let action = r.f64_vec(action_dim)?;
        let reward = r.f64()?;
        let next_obs = r.f64_vec(obs_dim)?;
        let priority = r.f64()?;
        let at = r.offset();
        let done = DoneKind::from_tag(r.u8()?).ok_or_else(|| crate::Error::decode(at, "unknown done kind"))?;
        let head_mask = r.u32()?;
        if !(priority >= 0.0) {
            return Err(crate::Error::decode(at - 8, "negative priority"));
        }
        Ok(Transition {
            obs,
            action,
            reward,
            next_obs,
            done,
            priority,
            head_mask,
        })
    }

    pub fn encoded_len(obs_dim: usize, action_dim: usize) -> usize {
        8 * (2 * obs_dim + action_dim + 2) + 1 + 4
    }
}
