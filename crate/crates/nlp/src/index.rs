//! Flat indexing of the decision vector.
//!
//! Variables are laid out state-major, then scenario, then period, then
//! family, then element:
//!
//! ```text
//! for k in 0..K { for s in 0..S { for t in 0..T {
//!     P[g..], Q[g..], e[n..], f[n..], ch[e..], dis[e..], soc[e..],
//!     inc[f..], dec[f..], rc[r..], lc[n..],
//!     (k == 0, redispatch mode only) dev_up[g..], dev_dn[g..]
//! } } }
//! ```

/// Element counts and study dimensions of one model instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub buses: usize,
    pub gens: usize,
    pub storage: usize,
    pub flex: usize,
    pub res: usize,
    pub scenarios: usize,
    pub periods: usize,
    pub states: usize,
    /// Whether the market-deviation split variables exist (redispatch mode).
    pub redispatch: bool,
}

/// Decision-variable families, in block order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    /// Generator active dispatch.
    GenP,
    /// Generator reactive dispatch.
    GenQ,
    /// Real part of the complex bus voltage.
    VoltRe,
    /// Imaginary part of the complex bus voltage.
    VoltIm,
    /// Storage charging power.
    Charge,
    /// Storage discharging power.
    Discharge,
    /// Stored energy at the start of the period.
    StoredEnergy,
    /// Flexible-load upward shift.
    FlexInc,
    /// Flexible-load downward shift.
    FlexDec,
    /// Curtailed renewable power.
    ResCurt,
    /// Curtailed load.
    LoadCurt,
    /// Positive part of the market-schedule deviation (state 0 only).
    DevUp,
    /// Negative part of the market-schedule deviation (state 0 only).
    DevDn,
}

/// A fully qualified variable coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarKey {
    pub kind: VarKind,
    pub elem: usize,
    pub s: usize,
    pub t: usize,
    pub k: usize,
}

/// Bijection between [`VarKey`] coordinates and flat vector positions.
#[derive(Debug, Clone)]
pub struct VariableIndex {
    dims: Dims,
    /// Family sizes without the deviation split.
    base_block: usize,
    /// Block size in state 0 (includes the split when redispatch is on).
    block0: usize,
    len: usize,
}

impl VariableIndex {
    pub fn new(dims: Dims) -> Self {
        let Dims { buses: n, gens: g, storage: e, flex: f, res: r, .. } = dims;
        let base_block = 2 * g + 2 * n + 3 * e + 2 * f + r + n;
        let block0 = base_block + if dims.redispatch { 2 * g } else { 0 };
        let st = dims.scenarios * dims.periods;
        let len = st * block0 + (dims.states - 1) * st * base_block;
        Self { dims, base_block, block0, len }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Total number of decision variables.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Size of the `(s, t)` block in state `k`.
    pub fn block_size(&self, k: usize) -> usize {
        if k == 0 {
            self.block0
        } else {
            self.base_block
        }
    }

    /// Flat position where the `(k, s, t)` block starts.
    pub fn block_start(&self, k: usize, s: usize, t: usize) -> usize {
        let d = &self.dims;
        let st = d.scenarios * d.periods;
        if k == 0 {
            (s * d.periods + t) * self.block0
        } else {
            st * self.block0 + (((k - 1) * st) + s * d.periods + t) * self.base_block
        }
    }

    /// Offset of a family within its block. Families `DevUp`/`DevDn` exist
    /// only in state-0 blocks of redispatch-mode problems.
    pub fn family_offset(&self, kind: VarKind, k: usize) -> usize {
        let d = &self.dims;
        let (n, g, e, f, r) = (d.buses, d.gens, d.storage, d.flex, d.res);
        let base = match kind {
            VarKind::GenP => 0,
            VarKind::GenQ => g,
            VarKind::VoltRe => 2 * g,
            VarKind::VoltIm => 2 * g + n,
            VarKind::Charge => 2 * g + 2 * n,
            VarKind::Discharge => 2 * g + 2 * n + e,
            VarKind::StoredEnergy => 2 * g + 2 * n + 2 * e,
            VarKind::FlexInc => 2 * g + 2 * n + 3 * e,
            VarKind::FlexDec => 2 * g + 2 * n + 3 * e + f,
            VarKind::ResCurt => 2 * g + 2 * n + 3 * e + 2 * f,
            VarKind::LoadCurt => 2 * g + 2 * n + 3 * e + 2 * f + r,
            VarKind::DevUp => {
                assert!(self.dims.redispatch && k == 0, "deviation split lives in state 0");
                self.base_block
            }
            VarKind::DevDn => {
                assert!(self.dims.redispatch && k == 0, "deviation split lives in state 0");
                self.base_block + g
            }
        };
        base
    }

    pub fn family_len(&self, kind: VarKind) -> usize {
        let d = &self.dims;
        match kind {
            VarKind::GenP | VarKind::GenQ | VarKind::DevUp | VarKind::DevDn => d.gens,
            VarKind::VoltRe | VarKind::VoltIm | VarKind::LoadCurt => d.buses,
            VarKind::Charge | VarKind::Discharge | VarKind::StoredEnergy => d.storage,
            VarKind::FlexInc | VarKind::FlexDec => d.flex,
            VarKind::ResCurt => d.res,
        }
    }

    /// Flat position of a variable.
    pub fn index(&self, kind: VarKind, elem: usize, s: usize, t: usize, k: usize) -> usize {
        debug_assert!(elem < self.family_len(kind));
        debug_assert!(s < self.dims.scenarios && t < self.dims.periods && k < self.dims.states);
        self.block_start(k, s, t) + self.family_offset(kind, k) + elem
    }

    /// Inverse lookup for a flat position.
    pub fn key(&self, idx: usize) -> VarKey {
        assert!(idx < self.len);
        let d = &self.dims;
        let st = d.scenarios * d.periods;
        let state0_len = st * self.block0;
        let (k, block, offset) = if idx < state0_len {
            (0, idx / self.block0, idx % self.block0)
        } else {
            let rest = idx - state0_len;
            let per_state = st * self.base_block;
            let k = 1 + rest / per_state;
            let within = rest % per_state;
            (k, within / self.base_block, within % self.base_block)
        };
        let s = block / d.periods;
        let t = block % d.periods;

        let families: &[VarKind] = &[
            VarKind::GenP,
            VarKind::GenQ,
            VarKind::VoltRe,
            VarKind::VoltIm,
            VarKind::Charge,
            VarKind::Discharge,
            VarKind::StoredEnergy,
            VarKind::FlexInc,
            VarKind::FlexDec,
            VarKind::ResCurt,
            VarKind::LoadCurt,
            VarKind::DevUp,
            VarKind::DevDn,
        ];
        let mut acc = 0;
        for &kind in families {
            if matches!(kind, VarKind::DevUp | VarKind::DevDn) && !(k == 0 && d.redispatch) {
                continue;
            }
            let len = self.family_len(kind);
            if offset < acc + len {
                return VarKey { kind, elem: offset - acc, s, t, k };
            }
            acc += len;
        }
        unreachable!("offset {offset} exceeds block size");
    }
}
