use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::poly::{Coeff, IntPoly, PseudoBooleanPoly};
use crate::classical::{ModuleStrategy, StrategySet};
use crate::error::{contract, Result};
use crate::target::{TargetFunction, Topology};

/// How a link symbol of a non-final module is spelled in binary variables.
/// Final-module cells always use one variable `b` with output `2b − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// One variable per cell; symbol = the variable. Requires a bit link.
    Bit,
    /// Two variables `(b1, b2)` per cell: `00 → 0`, `01 → 1`, `1x → 2`.
    /// The three indicators sum to 1 identically, so no penalty is needed.
    TritTwoBit,
    /// Three one-hot variables per cell with a quadratic penalty.
    TritOneHot,
}

impl Encoding {
    pub fn vars_per_cell(self) -> usize {
        match self {
            Self::Bit => 1,
            Self::TritTwoBit => 2,
            Self::TritOneHot => 3,
        }
    }

    fn arity(self) -> usize {
        match self {
            Self::Bit => 2,
            Self::TritTwoBit | Self::TritOneHot => 3,
        }
    }

    /// Default encoding for a link arity.
    pub fn for_arity(q: usize) -> Result<Self> {
        match q {
            2 => Ok(Self::Bit),
            3 => Ok(Self::TritTwoBit),
            _ => Err(contract(format!("no binary encoding for link arity {q}"))),
        }
    }

    /// Indicator polynomial of `symbol` for a cell spelled by `vars`.
    fn indicator(self, vars: &[u32], symbol: usize) -> IntPoly {
        match (self, symbol) {
            (Self::Bit, 0) => IntPoly::not(vars[0]),
            (Self::Bit, _) => IntPoly::var(vars[0]),
            (Self::TritTwoBit, 0) => IntPoly::not(vars[0]).mul(&IntPoly::not(vars[1])),
            (Self::TritTwoBit, 1) => IntPoly::not(vars[0]).mul(&IntPoly::var(vars[1])),
            (Self::TritTwoBit, _) => IntPoly::var(vars[0]),
            (Self::TritOneHot, s) => IntPoly::var(vars[s]),
        }
    }

    fn decode_cell(self, bits: &[bool]) -> Result<i8> {
        match self {
            Self::Bit => Ok(bits[0] as i8),
            Self::TritTwoBit => Ok(if bits[0] { 2 } else { bits[1] as i8 }),
            Self::TritOneHot => {
                let hot: Vec<usize> = (0..3).filter(|&i| bits[i]).collect();
                match hot.as_slice() {
                    [s] => Ok(*s as i8),
                    _ => Err(contract(format!(
                        "one-hot group {:?} does not select exactly one symbol",
                        bits.iter().map(|&b| b as u8).collect::<Vec<_>>()
                    ))),
                }
            }
        }
    }

    fn encode_cell(self, symbol: i8) -> Vec<bool> {
        match self {
            Self::Bit => vec![symbol == 1],
            Self::TritTwoBit => match symbol {
                0 => vec![false, false],
                1 => vec![false, true],
                _ => vec![true, false],
            },
            Self::TritOneHot => (0..3).map(|s| s == symbol as usize).collect(),
        }
    }
}

impl std::str::FromStr for Encoding {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "bit" => Ok(Self::Bit),
            "trit_twobit" | "twobit" => Ok(Self::TritTwoBit),
            "trit_onehot" | "onehot" => Ok(Self::TritOneHot),
            other => Err(contract(format!("unknown encoding {other:?}"))),
        }
    }
}

/// Which polynomial variables spell which strategy-table cells.
///
/// Variables are numbered module by module, then by incoming symbol, then by
/// local input; a frozen module owns no variables and keeps its fixed table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableLayout {
    topology: Topology,
    encoding: Encoding,
    /// `cells[module][cell]` lists the variables of that cell.
    cells: Vec<Vec<Vec<u32>>>,
    frozen: Vec<Option<ModuleStrategy>>,
    num_vars: usize,
}

impl VariableLayout {
    pub fn new(topology: &Topology, encoding: Encoding) -> Result<Self> {
        if encoding.arity() != topology.channel_arity() {
            return Err(contract(format!(
                "{encoding:?} encoding does not fit link arity {}",
                topology.channel_arity()
            )));
        }
        let n = topology.num_modules();
        let q = topology.channel_arity();
        let mut next = 0u32;
        let cells = (0..n)
            .map(|m| {
                let rows = if m == 0 { 1 } else { q };
                let per = if m + 1 == n { 1 } else { encoding.vars_per_cell() };
                (0..rows << topology.local_bits()[m])
                    .map(|_| {
                        let vars = (next..next + per as u32).collect();
                        next += per as u32;
                        vars
                    })
                    .collect()
            })
            .collect();
        Ok(Self { topology: topology.clone(), encoding, cells, frozen: vec![None; n], num_vars: next as usize })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Variables of cell `(incoming, local)` of `module`; empty when frozen.
    pub fn cell_vars(&self, module: usize, incoming: usize, local: usize) -> &[u32] {
        let width = 1usize << self.topology.local_bits()[module];
        &self.cells[module][incoming * width + local]
    }

    pub fn is_frozen(&self, module: usize) -> bool {
        self.frozen[module].is_some()
    }

    /// Owner of every variable: `(module, cell, slot)`.
    pub fn owners(&self) -> Vec<(usize, usize, usize)> {
        let mut out = vec![(0, 0, 0); self.num_vars];
        for (m, cells) in self.cells.iter().enumerate() {
            for (c, vars) in cells.iter().enumerate() {
                for (slot, &v) in vars.iter().enumerate() {
                    out[v as usize] = (m, c, slot);
                }
            }
        }
        out
    }

    fn is_last(&self, module: usize) -> bool {
        module + 1 == self.topology.num_modules()
    }

    /// Polynomial indicating that `module` emits `symbol` in `cell`.
    fn symbol_indicator(&self, module: usize, cell: usize, symbol: usize) -> IntPoly {
        match &self.frozen[module] {
            Some(t) => IntPoly::constant((t.cells()[cell] as usize == symbol) as i64),
            None => self.encoding.indicator(&self.cells[module][cell], symbol),
        }
    }

    /// Output polynomial (`±1`-valued) of a final-module cell.
    fn output(&self, cell: usize) -> IntPoly {
        let last = self.topology.num_modules() - 1;
        match &self.frozen[last] {
            Some(t) => IntPoly::constant(t.cells()[cell] as i64),
            // 2b − 1
            None => IntPoly(BTreeMap::from([(Vec::new(), -1), (vec![self.cells[last][cell][0]], 2)])),
        }
    }

    /// Strategy spelled by an assignment.
    pub fn decode(&self, assignment: &[bool]) -> Result<StrategySet> {
        if assignment.len() != self.num_vars {
            return Err(contract(format!(
                "assignment has {} values, layout has {} variables",
                assignment.len(),
                self.num_vars
            )));
        }
        let modules = (0..self.topology.num_modules())
            .map(|m| {
                if let Some(t) = &self.frozen[m] {
                    return Ok(t.clone());
                }
                let width = 1usize << self.topology.local_bits()[m];
                let table = self.cells[m]
                    .iter()
                    .map(|vars| {
                        let bits: Vec<bool> = vars.iter().map(|&v| assignment[v as usize]).collect();
                        if self.is_last(m) {
                            Ok(if bits[0] { 1 } else { -1 })
                        } else {
                            self.encoding.decode_cell(&bits)
                        }
                    })
                    .collect::<Result<Vec<i8>>>()?;
                ModuleStrategy::from_rows(&table.chunks(width).map(<[i8]>::to_vec).collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>>>()?;
        StrategySet::new(self.topology.clone(), modules)
    }

    /// Assignment spelling `strategy` (frozen modules are skipped).
    pub fn encode_strategy(&self, strategy: &StrategySet) -> Result<Vec<bool>> {
        if strategy.topology() != &self.topology {
            return Err(contract("strategy topology differs from the layout"));
        }
        let mut out = vec![false; self.num_vars];
        for (m, cells) in self.cells.iter().enumerate() {
            for (c, vars) in cells.iter().enumerate() {
                if vars.is_empty() {
                    continue;
                }
                let v = strategy.module(m).cells()[c];
                let bits = if self.is_last(m) { vec![v == 1] } else { self.encoding.encode_cell(v) };
                for (&var, b) in vars.iter().zip(bits) {
                    out[var as usize] = b;
                }
            }
        }
        Ok(out)
    }
}

/// Encode "minimise `−Σ_x T(x)·O(x)`" over every processor of `target`'s
/// topology. One-hot encodings use the default penalty weight
/// `1 + |support|`.
pub fn encode_correlation(target: &TargetFunction, encoding: Encoding) -> Result<(PseudoBooleanPoly, VariableLayout)> {
    let lambda = 1 + target.support_size() as i64;
    encode_with_penalty(target, encoding, lambda)
}

pub fn encode_with_penalty(
    target: &TargetFunction,
    encoding: Encoding,
    lambda: i64,
) -> Result<(PseudoBooleanPoly, VariableLayout)> {
    let layout = VariableLayout::new(target.topology(), encoding)?;
    let poly = build(target, &layout, lambda);
    Ok((poly, layout))
}

fn build(target: &TargetFunction, layout: &VariableLayout, lambda: i64) -> PseudoBooleanPoly {
    let topology = target.topology();
    let n = topology.num_modules();
    let q = topology.channel_arity();
    let mut total = IntPoly::default();
    for word in 0..topology.num_words() {
        let t = target.value(word) as i64;
        if t == 0 {
            continue;
        }
        // reach[s]: polynomial that is 1 exactly when the link after the
        // current module carries s.
        let local0 = topology.local_input(0, word);
        let mut reach: Vec<IntPoly> = (0..q).map(|s| layout.symbol_indicator(0, local0, s)).collect();
        for m in 1..n - 1 {
            let width = 1usize << topology.local_bits()[m];
            let local = topology.local_input(m, word);
            let mut next = vec![IntPoly::default(); q];
            for (s, r) in reach.iter().enumerate() {
                if r.is_zero() {
                    continue;
                }
                for (dst, nx) in next.iter_mut().enumerate() {
                    let ind = layout.symbol_indicator(m, s * width + local, dst);
                    if !ind.is_zero() {
                        nx.add_scaled(&r.mul(&ind), 1);
                    }
                }
            }
            reach = next;
        }
        let width = 1usize << topology.local_bits()[n - 1];
        let local = topology.local_input(n - 1, word);
        for (s, r) in reach.iter().enumerate() {
            if !r.is_zero() {
                total.add_scaled(&r.mul(&layout.output(s * width + local)), -t);
            }
        }
    }
    if layout.encoding == Encoding::TritOneHot {
        for m in 0..n - 1 {
            if layout.frozen[m].is_some() {
                continue;
            }
            for vars in &layout.cells[m] {
                // λ·(Σx − 1)² = λ·(1 − Σx + 2Σ_{s<t} x_s x_t) on {0,1}.
                total.add_scaled(&IntPoly::constant(1), lambda);
                for (i, &a) in vars.iter().enumerate() {
                    total.add_scaled(&IntPoly::var(a), -lambda);
                    for &b in &vars[i + 1..] {
                        total.add_scaled(&IntPoly::var(a).mul(&IntPoly::var(b)), 2 * lambda);
                    }
                }
            }
        }
    }
    let mut poly = PseudoBooleanPoly::new(layout.num_vars);
    for (key, c) in total.0 {
        poly.add_sorted(key, Coeff::from_integer(c));
    }
    poly
}

/// Fix `module` to `table`: substitute its cells into the polynomial and drop
/// its variables, renumbering the rest in order.
pub fn freeze_module(
    poly: &PseudoBooleanPoly,
    layout: &VariableLayout,
    module: usize,
    table: &ModuleStrategy,
) -> Result<(PseudoBooleanPoly, VariableLayout)> {
    let topology = &layout.topology;
    let n = topology.num_modules();
    if module >= n {
        return Err(contract(format!("module {} out of range 1..={n}", module + 1)));
    }
    if layout.frozen[module].is_some() {
        return Err(contract(format!("module {} is already frozen", module + 1)));
    }
    // Validate the table by slotting it into an otherwise arbitrary strategy.
    let mut probe = layout.decode(&vec![false; layout.num_vars])?;
    let expected = probe.module(module).clone();
    if expected.width() != table.width() || expected.num_rows() != table.num_rows() {
        return Err(contract(format!(
            "frozen table for module {} has shape {}x{}, expected {}x{}",
            module + 1,
            table.num_rows(),
            table.width(),
            expected.num_rows(),
            expected.width()
        )));
    }
    *probe.module_mut(module) = table.clone();
    StrategySet::new(topology.clone(), probe.modules().to_vec())?;

    // Values of the frozen variables.
    let mut fixed: BTreeMap<u32, bool> = BTreeMap::new();
    for (c, vars) in layout.cells[module].iter().enumerate() {
        let v = table.cells()[c];
        let bits = if module + 1 == n { vec![v == 1] } else { layout.encoding.encode_cell(v) };
        for (&var, b) in vars.iter().zip(bits) {
            fixed.insert(var, b);
        }
    }
    let mut remap = vec![u32::MAX; layout.num_vars];
    let mut next = 0u32;
    for (v, slot) in remap.iter_mut().enumerate() {
        if !fixed.contains_key(&(v as u32)) {
            *slot = next;
            next += 1;
        }
    }

    let mut out = PseudoBooleanPoly::new(next as usize);
    out.add_constant(poly.constant());
    'terms: for (vars, c) in poly.terms() {
        let mut key = Vec::with_capacity(vars.len());
        for v in vars {
            match fixed.get(v) {
                Some(false) => continue 'terms,
                Some(true) => {}
                None => key.push(remap[*v as usize]),
            }
        }
        out.add_sorted(key, c);
    }
    debug_assert!(out.terms().all(|(_, c)| !c.is_zero()));

    let mut new_layout = layout.clone();
    new_layout.num_vars = next as usize;
    for (m, cells) in new_layout.cells.iter_mut().enumerate() {
        for vars in cells.iter_mut() {
            if m == module {
                vars.clear();
            } else {
                vars.iter_mut().for_each(|v| *v = remap[*v as usize]);
            }
        }
    }
    new_layout.frozen[module] = Some(table.clone());
    Ok((out, new_layout))
}
