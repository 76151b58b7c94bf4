use std::sync::{Arc, Mutex, RwLock, RwLockReadGuard};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    classify_timing, decide, CooldownTable, Notification, SelectError, Selection, SelectorConfig,
    Suppression, TimingClass, UserContext, UsefulPriors,
};
use crate::bayes::{BayesNet, CandidateMap};
use crate::geo::GeoPoint;
use crate::store::{ContentRecord, Fix, HeadingEstimate, Store, StoreError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Select(#[from] SelectError),
}

/// Result of one poll, as returned to the client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollOutcome {
    pub heading: HeadingEstimate,
    pub notification: Option<Notification>,
    /// Where the notified content lay relative to the walker.
    pub timing: Option<TimingClass>,
    pub suppressed: Vec<Suppression>,
    /// Set when nothing is notified: the client shows a bare map here.
    pub map_center: Option<GeoPoint>,
}

/// The selection service without a transport: store, cooldown table and
/// the serving network. The network is an immutable snapshot replaced
/// atomically by [`Engine::swap_model`].
pub struct Engine {
    store: RwLock<Store>,
    cooldown: Mutex<CooldownTable>,
    model: RwLock<Arc<BayesNet>>,
    candidates: CandidateMap,
    priors: UsefulPriors,
    config: SelectorConfig,
}

impl Engine {
    pub fn new(
        store: Store,
        model: BayesNet,
        candidates: CandidateMap,
        priors: UsefulPriors,
        config: SelectorConfig,
    ) -> Result<Self, EngineError> {
        config.validate()?;
        Ok(Engine {
            store: RwLock::new(store),
            cooldown: Mutex::new(CooldownTable::default()),
            model: RwLock::new(Arc::new(model)),
            candidates,
            priors,
            config,
        })
    }

    pub fn config(&self) -> &SelectorConfig {
        &self.config
    }

    pub fn candidates(&self) -> &CandidateMap {
        &self.candidates
    }

    pub fn model(&self) -> Arc<BayesNet> {
        self.model.read().expect("model lock").clone()
    }

    pub fn swap_model(&self, net: BayesNet) {
        *self.model.write().expect("model lock") = Arc::new(net);
    }

    pub fn store(&self) -> RwLockReadGuard<'_, Store> {
        self.store.read().expect("store lock")
    }

    pub fn submit_content(&self, record: ContentRecord) -> Result<String, EngineError> {
        Ok(self.store.write().expect("store lock").put_content(record)?)
    }

    /// Stores `record` under the first free id of the form `c{n}`.
    pub fn submit_with_new_id(&self, mut record: ContentRecord) -> Result<String, EngineError> {
        let mut store = self.store.write().expect("store lock");
        let mut n = store.len() + 1;
        while store.contains(&format!("c{n}")) {
            n += 1;
        }
        record.id = format!("c{n}");
        Ok(store.put_content(record)?)
    }

    /// Appends the fix, selects at most one content and arms its cooldown.
    pub fn handle_fix(&self, fix: Fix, ctx: &UserContext) -> Result<PollOutcome, EngineError> {
        ctx.validate()?;
        let net = self.model();
        let mut store = self.store.write().expect("store lock");
        let heading = store.append_fix(fix.clone())?;
        let mut cooldown = self.cooldown.lock().expect("cooldown lock");
        let sel = Selection {
            net: &net,
            candidates: &self.candidates,
            priors: &self.priors,
            config: &self.config,
        };
        let decision = decide(sel, &store, &cooldown, &fix, &heading, ctx);
        let timing = decision
            .notification
            .as_ref()
            .map(|n| classify_timing(n.content.location, &fix, &heading, &self.config));
        if let Some(n) = &decision.notification {
            cooldown.record(&fix.user_id, &n.content.id, fix.at);
        }
        let map_center = decision.notification.is_none().then_some(fix.point);
        Ok(PollOutcome {
            heading,
            notification: decision.notification,
            timing,
            suppressed: decision.suppressed,
            map_center,
        })
    }
}
