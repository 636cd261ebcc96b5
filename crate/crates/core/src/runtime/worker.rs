use std::time::Instant;

use crate::error::{Error, Result};
use crate::local::{local_sdca, LocalRoundInput};
use crate::loss::Loss;
use crate::objective::{task_gap_partial, TaskGapPartial};
use crate::problem::TaskData;
use crate::rng::round_seed;

use super::message::{decode_msg, encode_msg, Message, ServerBroadcastMsg, WorkerUpdateMsg};

/// Logical worker for one task. Owns its dual block; sees the rest of the
/// world only through broadcast frames.
pub(crate) struct Worker<'a> {
    idx: usize,
    task: &'a TaskData,
    alpha: Vec<f64>,
    loss: Loss,
    lambda: f64,
    h: usize,
    eta: f64,
    seed: u64,
}

impl<'a> Worker<'a> {
    pub fn new(
        idx: usize,
        task: &'a TaskData,
        alpha: Vec<f64>,
        loss: Loss,
        lambda: f64,
        h: usize,
        eta: f64,
        seed: u64,
    ) -> Self {
        Worker {
            idx,
            task,
            alpha,
            loss,
            lambda,
            h,
            eta,
            seed,
        }
    }

    pub fn into_alpha(self) -> Vec<f64> {
        self.alpha
    }

    fn receive(&self, frame: &[u8]) -> Result<ServerBroadcastMsg> {
        let msg = match decode_msg(frame)? {
            Message::ServerBroadcast(b) => b,
            Message::WorkerUpdate(_) => return Err(Error::BadTag(1)),
        };
        if msg.task_id as usize != self.idx {
            return Err(Error::BadConfig(format!(
                "broadcast for task {} delivered to task {}",
                msg.task_id, self.idx
            )));
        }
        Ok(msg)
    }

    /// Local SDCA on the subproblem, apply eta * delta_alpha, reply with
    /// eta * delta_b.
    pub fn local_round(&mut self, frame: &[u8]) -> Result<Vec<u8>> {
        let start = Instant::now();
        let msg = self.receive(frame)?;
        let input = LocalRoundInput {
            alpha_block: &self.alpha,
            w_i: &msg.w_i,
            sigma_ii: msg.sigma_ii,
            rho: msg.rho,
            h: self.h,
            rng_seed: round_seed(self.seed, msg.round as u64, self.idx as u64),
            loss: self.loss,
            lambda: self.lambda,
        };
        let out = local_sdca(&input, self.task)?;
        for (a, d) in self.alpha.iter_mut().zip(&out.delta_alpha) {
            *a += self.eta * d;
        }
        let delta_b = out.delta_b.iter().map(|v| self.eta * v).collect();
        let reply = WorkerUpdateMsg {
            task_id: msg.task_id,
            round: msg.round,
            delta_b,
            local_obj_gain: out.local_obj_gain,
            wall_micros: start.elapsed().as_micros() as u64,
        };
        Ok(encode_msg(&Message::WorkerUpdate(reply)))
    }

    pub fn gap_partial(&self, frame: &[u8]) -> Result<TaskGapPartial> {
        let msg = self.receive(frame)?;
        task_gap_partial(self.loss, self.task, &self.alpha, &msg.w_i)
    }
}
