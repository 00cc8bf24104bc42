use alloc::vec;
use alloc::vec::Vec;

use super::{
    require_mode, top_k, w_delta_same, BetaPosterior, Direction, Policy, SearchEvent, Trigger,
};
use crate::environment::FeedbackVector;
use crate::error::Result;
use crate::model::{theta_candidate_set, Allocation, Mode, PublicView, GRID_TOL};
use crate::primitives::RngStream;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SameThresholdConfig {
    pub delta: f64,
    pub epsilon: f64,
}

/// Binary search over the candidate set `Q/K, ..., Q` for a common threshold,
/// Thompson sampling on top. The loss-mode variant (`csb-sk`) treats an
/// observed loss as "too little"; the reward-mode variant (`num-sk`) treats
/// an observed reward as "enough".
#[derive(Clone, Debug)]
pub struct KnownSameThreshold {
    view: PublicView,
    candidates: Vec<f64>,
    wait: u64,
    // 1-based indices into `candidates`.
    l: usize,
    u: usize,
    j: usize,
    quiet: u64,
    posterior: BetaPosterior,
    rng: RngStream,
    samples: Vec<f64>,
    chosen: Vec<usize>,
    in_chosen: Vec<bool>,
    round: u64,
    events: Vec<SearchEvent>,
}

impl KnownSameThreshold {
    pub fn csb_sk(view: PublicView, config: SameThresholdConfig, rng: RngStream) -> Result<Self> {
        require_mode(&view, "csb-sk", Mode::Loss)?;
        Self::build(view, config, rng)
    }

    pub fn num_sk(view: PublicView, config: SameThresholdConfig, rng: RngStream) -> Result<Self> {
        require_mode(&view, "num-sk", Mode::Reward)?;
        Self::build(view, config, rng)
    }

    fn build(view: PublicView, config: SameThresholdConfig, rng: RngStream) -> Result<Self> {
        let k = view.arms;
        let candidates = theta_candidate_set(k, view.budget)?;
        let wait = if k == 1 {
            1
        } else {
            w_delta_same(k, config.delta, config.epsilon)?
        };
        Ok(Self {
            view,
            candidates,
            wait,
            l: 1,
            u: k,
            j: (1 + k) / 2,
            quiet: 0,
            posterior: BetaPosterior::new(k),
            rng,
            samples: Vec::with_capacity(k),
            chosen: Vec::new(),
            in_chosen: vec![false; k],
            round: 0,
            events: Vec::new(),
        })
    }

    pub fn waiting_budget(&self) -> u64 {
        self.wait
    }

    pub fn current_candidate(&self) -> f64 {
        self.candidates[self.j - 1]
    }

    /// `(l, j, u)`, 1-based.
    pub fn search_state(&self) -> (usize, usize, usize) {
        (self.l, self.j, self.u)
    }

    /// Arms funded in the last round.
    pub fn chosen(&self) -> &[usize] {
        &self.chosen
    }

    pub fn rng(&self) -> &RngStream {
        &self.rng
    }

    fn is_loss_mode(&self) -> bool {
        self.view.mode == Mode::Loss
    }

    fn funded_count(&self) -> usize {
        let m = libm::floor(self.view.budget / self.current_candidate() + GRID_TOL) as usize;
        m.min(self.view.arms)
    }

    fn record_move(&mut self, trigger: Trigger, direction: Direction) {
        self.events.push(SearchEvent::Move {
            round: self.round,
            arm: None,
            trigger,
            direction,
            next: self.current_candidate(),
        });
        if self.j == self.u {
            self.events.push(SearchEvent::Lock {
                round: self.round,
                arm: None,
                estimate: self.current_candidate(),
            });
        }
    }

    fn raise_lower(&mut self, trigger: Trigger) {
        self.l = self.j + 1;
        self.j = (self.l + self.u) / 2;
        self.quiet = 0;
        self.record_move(trigger, Direction::Up);
    }

    fn lower_upper(&mut self, trigger: Trigger) {
        self.u = self.j;
        self.j = (self.l + self.u) / 2;
        self.quiet = 0;
        self.record_move(trigger, Direction::Down);
    }

    fn update_loss_mode(&mut self, y: &[bool]) {
        let k = self.view.arms;
        if self.j != self.u {
            if self.chosen.iter().any(|&i| y[i]) {
                self.raise_lower(Trigger::Feedback);
                for (i, &yi) in y.iter().enumerate() {
                    self.posterior.observe(i, yi);
                    self.posterior.flush_pending(i);
                }
            } else {
                self.quiet += 1;
                for &i in &self.chosen {
                    self.posterior.bump_pending(i);
                }
                if self.quiet == self.wait {
                    self.lower_upper(Trigger::Silence);
                    self.posterior.clear_all_pending();
                }
                for i in (0..k).filter(|&i| !self.in_chosen[i]) {
                    self.posterior.observe(i, y[i]);
                }
            }
        } else {
            for i in (0..k).filter(|&i| !self.in_chosen[i]) {
                self.posterior.observe(i, y[i]);
            }
        }
    }

    fn update_reward_mode(&mut self, y: &[bool]) {
        if self.j != self.u {
            if self.chosen.iter().any(|&i| y[i]) {
                self.lower_upper(Trigger::Feedback);
                for &i in &self.chosen {
                    self.posterior.observe(i, y[i]);
                    self.posterior.flush_pending(i);
                }
                // Unfunded arms never accumulate pending counts here, so
                // this transfer is a no-op kept for fidelity.
                for i in 0..self.view.arms {
                    if !self.in_chosen[i] {
                        self.posterior.flush_pending(i);
                    }
                }
            } else {
                self.quiet += 1;
                for &i in &self.chosen {
                    self.posterior.bump_pending(i);
                }
                if self.quiet == self.wait {
                    self.raise_lower(Trigger::Silence);
                    self.posterior.clear_all_pending();
                }
            }
        } else {
            for &i in &self.chosen {
                self.posterior.observe(i, y[i]);
            }
        }
    }
}

impl Policy for KnownSameThreshold {
    fn name(&self) -> &'static str {
        if self.is_loss_mode() {
            "csb-sk"
        } else {
            "num-sk"
        }
    }

    fn select(&mut self, round: u64) -> Result<Allocation> {
        self.round = round;
        self.posterior
            .sample_into(&mut self.rng, &mut self.samples)?;
        let level = self.current_candidate();
        self.chosen = top_k(&self.samples, self.funded_count());
        self.in_chosen.iter_mut().for_each(|b| *b = false);
        for &i in &self.chosen {
            self.in_chosen[i] = true;
        }
        Ok(Allocation::uniform_on(self.view.arms, &self.chosen, level))
    }

    fn update(&mut self, feedback: &FeedbackVector) -> Result<()> {
        if self.is_loss_mode() {
            self.update_loss_mode(&feedback.y);
        } else {
            self.update_reward_mode(&feedback.y);
        }
        Ok(())
    }

    fn locked(&self) -> Option<bool> {
        Some(self.j == self.u)
    }

    fn threshold_estimate(&self) -> Option<Vec<f64>> {
        Some(vec![self.current_candidate(); self.view.arms])
    }

    fn events(&self) -> &[SearchEvent] {
        &self.events
    }

    fn posterior(&self) -> Option<&BetaPosterior> {
        Some(&self.posterior)
    }
}
