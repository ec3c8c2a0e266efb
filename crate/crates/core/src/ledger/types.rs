use std::fmt;

use serde::{Deserialize, Serialize};

use crate::codec::{Decode, DecodeError, Decoder, Encode, Encoder};
use crate::contracts::ReadingZone;
use crate::crypto::{sha256, tagged_hash, Hash32, PublicKey, Signature, Signer};

/// Logical time. Driven by the scenario clock, never by wall time.
pub type Tick = u64;

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            /// Returns `None` for an empty or whitespace-only identifier.
            pub fn new(id: impl Into<String>) -> Option<Self> {
                let id = id.into();
                if id.trim().is_empty() {
                    None
                } else {
                    Some(Self(id))
                }
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({:?})", stringify!($name), self.0)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl Encode for $name {
            fn encode(&self, enc: &mut Encoder) {
                enc.str(&self.0);
            }
        }

        impl Decode for $name {
            fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
                let s = dec.string()?;
                Self::new(s).ok_or_else(|| DecodeError::InvalidValue("empty identifier".into()))
            }
        }

        impl std::str::FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::new(s).ok_or_else(|| format!("empty {}", stringify!($name)))
            }
        }
    };
}

string_id!(
    /// Enrolment identifier of a supply-chain entity.
    ParticipantId
);
string_id!(
    /// Commodity identifier (CID).
    Cid
);
string_id!(
    /// Quality-contract identifier.
    ContractId
);

/// Digest identifying a transaction: hash of its canonical encoding.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TxId(pub Hash32);

impl fmt::Debug for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TxId({})", &self.0.to_hex()[..16])
    }
}

impl fmt::Display for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Encode for TxId {
    fn encode(&self, enc: &mut Encoder) {
        self.0.encode(enc);
    }
}

impl Decode for TxId {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(TxId(dec.get()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    PrimaryProducer,
    Logistics,
    Retailer,
    Regulator,
    GatewayDevice,
    Admin,
}

impl Role {
    pub const ALL: [Role; 6] = [
        Role::PrimaryProducer,
        Role::Logistics,
        Role::Retailer,
        Role::Regulator,
        Role::GatewayDevice,
        Role::Admin,
    ];

    /// Roles that hold and trade commodities.
    pub fn is_trader(self) -> bool {
        matches!(self, Role::PrimaryProducer | Role::Logistics | Role::Retailer)
    }

    fn tag(self) -> u8 {
        self as u8
    }
}

impl Encode for Role {
    fn encode(&self, enc: &mut Encoder) {
        enc.u8(self.tag());
    }
}

impl Decode for Role {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let tag = dec.u8()?;
        Role::ALL
            .get(tag as usize)
            .copied()
            .ok_or(DecodeError::InvalidTag { what: "role", tag })
    }
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "primary_producer" | "producer" => Role::PrimaryProducer,
            "logistics" | "shipper" => Role::Logistics,
            "retailer" => Role::Retailer,
            "regulator" => Role::Regulator,
            "gateway_device" | "gateway" => Role::GatewayDevice,
            "admin" => Role::Admin,
            other => return Err(format!("unknown role `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Active,
    Revoked,
}

impl Encode for Status {
    fn encode(&self, enc: &mut Encoder) {
        enc.u8(matches!(self, Status::Revoked) as u8);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub id: ParticipantId,
    pub public_key: PublicKey,
    pub role: Role,
    pub status: Status,
    pub registered_at: Tick,
}

impl Participant {
    pub fn is_active(&self) -> bool {
        self.status == Status::Active
    }
}

impl Encode for Participant {
    fn encode(&self, enc: &mut Encoder) {
        enc.put(&self.id)
            .put(&self.public_key)
            .put(&self.role)
            .put(&self.status)
            .u64(self.registered_at);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorReading {
    pub tick: Tick,
    pub celsius: f64,
    pub zone: ReadingZone,
}

/// One entry of the commodity's sensor-score vector, produced per trade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorScore {
    pub tick: Tick,
    pub score: f64,
    /// The trade segment had no readings; `score` is the neutral default.
    pub unmonitored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OwnershipRecord {
    pub owner: ParticipantId,
    pub since: Tick,
    pub tx_id: TxId,
}

/// Aggregate quality rating computed on receipt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommodityRating {
    pub value: f64,
    pub unmonitored: bool,
    pub computed_at: Tick,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Commodity {
    pub cid: Cid,
    pub commodity_type: String,
    pub contract_id: ContractId,
    pub owner: ParticipantId,
    pub data_hash: Hash32,
    pub created_at: Tick,
    pub chain_complete: bool,
    pub sensor_scores: Vec<SensorScore>,
    pub readings: Vec<SensorReading>,
    /// Index into `readings` where the current trade segment starts.
    pub segment_start: usize,
    pub provenance: Vec<OwnershipRecord>,
    pub overall_rating: Option<CommodityRating>,
}

impl Commodity {
    pub fn segment_readings(&self) -> &[SensorReading] {
        &self.readings[self.segment_start..]
    }

    /// Tick of the most recent creation or trade.
    pub fn last_movement(&self) -> Tick {
        self.provenance.last().map(|r| r.since).unwrap_or(self.created_at)
    }
}

impl Encode for Commodity {
    fn encode(&self, enc: &mut Encoder) {
        enc.put(&self.cid)
            .str(&self.commodity_type)
            .put(&self.contract_id)
            .put(&self.owner)
            .put(&self.data_hash)
            .u64(self.created_at)
            .bool(self.chain_complete);
        enc.len(self.sensor_scores.len());
        for s in &self.sensor_scores {
            enc.u64(s.tick).f64(s.score).bool(s.unmonitored);
        }
        enc.len(self.readings.len());
        for r in &self.readings {
            enc.u64(r.tick).f64(r.celsius).u8(r.zone as u8);
        }
        enc.u64(self.segment_start as u64);
        enc.len(self.provenance.len());
        for p in &self.provenance {
            enc.put(&p.owner).u64(p.since).put(&p.tx_id);
        }
        match &self.overall_rating {
            None => enc.u8(0),
            Some(r) => enc.u8(1).f64(r.value).bool(r.unmonitored).u64(r.computed_at),
        };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxKind {
    Create,
    Trade,
    Sensory,
    RegulatorRating,
    Receipt,
    Revoke,
    Resume,
}

impl TxKind {
    pub const ALL: [TxKind; 7] = [
        TxKind::Create,
        TxKind::Trade,
        TxKind::Sensory,
        TxKind::RegulatorRating,
        TxKind::Receipt,
        TxKind::Revoke,
        TxKind::Resume,
    ];
}

/// Payload of a ledger transaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TxBody {
    Create {
        cid: Cid,
        data_hash: Hash32,
        owner_id: ParticipantId,
        contract_id: ContractId,
        sig: Signature,
        pub_key: PublicKey,
    },
    Trade {
        cid: Cid,
        data_hash: Hash32,
        buyer_id: ParticipantId,
        seller_sig: Signature,
        seller_pub: PublicKey,
        buyer_sig: Signature,
        buyer_pub: PublicKey,
        /// The buyer's rating of the seller, normalized to [0,1].
        buyer_rating: f64,
    },
    Sensory {
        cid: Cid,
        /// Digest of the canonical encoding of `readings`.
        data_hash: Hash32,
        device_id: ParticipantId,
        device_sig: Signature,
        readings: Vec<f64>,
    },
    RegulatorRating {
        regulator_id: ParticipantId,
        seller_id: ParticipantId,
        data_hash: Hash32,
        commodity_type: String,
        rating: f64,
        issued_at: Tick,
        sig: Signature,
    },
    Receipt {
        cid: Cid,
        retailer_sig: Signature,
        retailer_pub: PublicKey,
    },
    Revoke {
        admin_id: ParticipantId,
        participant_id: ParticipantId,
        sig: Signature,
    },
    Resume {
        admin_id: ParticipantId,
        participant_id: ParticipantId,
        sig: Signature,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub submitted_at: Tick,
    pub body: TxBody,
}

impl TxBody {
    pub fn kind(&self) -> TxKind {
        match self {
            TxBody::Create { .. } => TxKind::Create,
            TxBody::Trade { .. } => TxKind::Trade,
            TxBody::Sensory { .. } => TxKind::Sensory,
            TxBody::RegulatorRating { .. } => TxKind::RegulatorRating,
            TxBody::Receipt { .. } => TxKind::Receipt,
            TxBody::Revoke { .. } => TxKind::Revoke,
            TxBody::Resume { .. } => TxKind::Resume,
        }
    }

    /// Writes every field in canonical order. Signature fields are skipped
    /// when `with_sigs` is false, which yields the signed message.
    fn encode_fields(&self, enc: &mut Encoder, with_sigs: bool) {
        enc.u8(self.kind() as u8);
        match self {
            TxBody::Create { cid, data_hash, owner_id, contract_id, sig, pub_key } => {
                enc.put(cid).put(data_hash).put(owner_id).put(contract_id);
                if with_sigs {
                    enc.put(sig);
                }
                enc.put(pub_key);
            }
            TxBody::Trade {
                cid,
                data_hash,
                buyer_id,
                seller_sig,
                seller_pub,
                buyer_sig,
                buyer_pub,
                buyer_rating,
            } => {
                enc.put(cid).put(data_hash).put(buyer_id);
                if with_sigs {
                    enc.put(seller_sig);
                }
                enc.put(seller_pub);
                if with_sigs {
                    enc.put(buyer_sig);
                }
                enc.put(buyer_pub).f64(*buyer_rating);
            }
            TxBody::Sensory { cid, data_hash, device_id, device_sig, readings } => {
                enc.put(cid).put(data_hash).put(device_id);
                if with_sigs {
                    enc.put(device_sig);
                }
                enc.seq(readings);
            }
            TxBody::RegulatorRating {
                regulator_id,
                seller_id,
                data_hash,
                commodity_type,
                rating,
                issued_at,
                sig,
            } => {
                enc.put(regulator_id)
                    .put(seller_id)
                    .put(data_hash)
                    .str(commodity_type)
                    .f64(*rating)
                    .u64(*issued_at);
                if with_sigs {
                    enc.put(sig);
                }
            }
            TxBody::Receipt { cid, retailer_sig, retailer_pub } => {
                enc.put(cid);
                if with_sigs {
                    enc.put(retailer_sig);
                }
                enc.put(retailer_pub);
            }
            TxBody::Revoke { admin_id, participant_id, sig }
            | TxBody::Resume { admin_id, participant_id, sig } => {
                enc.put(admin_id).put(participant_id);
                if with_sigs {
                    enc.put(sig);
                }
            }
        }
    }
}

impl Transaction {
    pub fn kind(&self) -> TxKind {
        self.body.kind()
    }

    /// The message every signature in this transaction covers.
    pub fn signing_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.str("trustchain/tx-sign").u64(self.submitted_at);
        self.body.encode_fields(&mut enc, false);
        enc.finish()
    }

    pub fn id(&self) -> TxId {
        TxId(tagged_hash("trustchain/tx", &self.to_canonical_bytes()))
    }

    pub fn cid(&self) -> Option<&Cid> {
        match &self.body {
            TxBody::Create { cid, .. }
            | TxBody::Trade { cid, .. }
            | TxBody::Sensory { cid, .. }
            | TxBody::Receipt { cid, .. } => Some(cid),
            _ => None,
        }
    }
}

impl Encode for Transaction {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(self.submitted_at);
        self.body.encode_fields(enc, true);
    }
}

impl Decode for Transaction {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let submitted_at = dec.u64()?;
        let tag = dec.u8()?;
        let body = match tag {
            0 => TxBody::Create {
                cid: dec.get()?,
                data_hash: dec.get()?,
                owner_id: dec.get()?,
                contract_id: dec.get()?,
                sig: dec.get()?,
                pub_key: dec.get()?,
            },
            1 => TxBody::Trade {
                cid: dec.get()?,
                data_hash: dec.get()?,
                buyer_id: dec.get()?,
                seller_sig: dec.get()?,
                seller_pub: dec.get()?,
                buyer_sig: dec.get()?,
                buyer_pub: dec.get()?,
                buyer_rating: dec.f64()?,
            },
            2 => TxBody::Sensory {
                cid: dec.get()?,
                data_hash: dec.get()?,
                device_id: dec.get()?,
                device_sig: dec.get()?,
                readings: dec.seq()?,
            },
            3 => TxBody::RegulatorRating {
                regulator_id: dec.get()?,
                seller_id: dec.get()?,
                data_hash: dec.get()?,
                commodity_type: dec.string()?,
                rating: dec.f64()?,
                issued_at: dec.u64()?,
                sig: dec.get()?,
            },
            4 => TxBody::Receipt {
                cid: dec.get()?,
                retailer_sig: dec.get()?,
                retailer_pub: dec.get()?,
            },
            5 => TxBody::Revoke {
                admin_id: dec.get()?,
                participant_id: dec.get()?,
                sig: dec.get()?,
            },
            6 => TxBody::Resume {
                admin_id: dec.get()?,
                participant_id: dec.get()?,
                sig: dec.get()?,
            },
            tag => return Err(DecodeError::InvalidTag { what: "transaction", tag }),
        };
        Ok(Transaction { submitted_at, body })
    }
}

/// Canonical encoding of a sensor reading batch, as kept in the off-chain store.
pub fn readings_payload(readings: &[f64]) -> Vec<u8> {
    let mut enc = Encoder::new();
    enc.seq(readings);
    enc.finish()
}

/// Digest of [`readings_payload`].
pub fn readings_hash(readings: &[f64]) -> Hash32 {
    sha256(&readings_payload(readings))
}

/// A signing identity: participant id plus key material.
#[derive(Clone)]
pub struct Identity {
    pub id: ParticipantId,
    pub signer: crate::crypto::SignerRef,
}

impl fmt::Debug for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Identity")
            .field("id", &self.id)
            .field("public_key", &self.signer.public_key())
            .finish()
    }
}

impl Identity {
    pub fn new(id: ParticipantId, signer: crate::crypto::SignerRef) -> Self {
        Self { id, signer }
    }

    pub fn public_key(&self) -> PublicKey {
        self.signer.public_key()
    }
}

/// Builders that produce correctly signed transactions.
impl Transaction {
    pub fn create(
        owner: &Identity,
        cid: Cid,
        data_hash: Hash32,
        contract_id: ContractId,
        at: Tick,
    ) -> Self {
        let mut tx = Transaction {
            submitted_at: at,
            body: TxBody::Create {
                cid,
                data_hash,
                owner_id: owner.id.clone(),
                contract_id,
                sig: Signature::default(),
                pub_key: owner.public_key(),
            },
        };
        let msg = tx.signing_bytes();
        if let TxBody::Create { sig, .. } = &mut tx.body {
            *sig = owner.signer.sign(&msg);
        }
        tx
    }

    /// Trade signed by `seller_signer` while carrying `seller_pub`. Honest
    /// callers pass the seller's own key for both; see [`Transaction::trade`].
    #[allow(clippy::too_many_arguments)]
    pub fn trade_with_keys(
        seller_signer: &dyn Signer,
        seller_pub: PublicKey,
        buyer: &Identity,
        cid: Cid,
        data_hash: Hash32,
        buyer_rating: f64,
        at: Tick,
    ) -> Self {
        let mut tx = Transaction {
            submitted_at: at,
            body: TxBody::Trade {
                cid,
                data_hash,
                buyer_id: buyer.id.clone(),
                seller_sig: Signature::default(),
                seller_pub,
                buyer_sig: Signature::default(),
                buyer_pub: buyer.public_key(),
                buyer_rating,
            },
        };
        let msg = tx.signing_bytes();
        if let TxBody::Trade { seller_sig, buyer_sig, .. } = &mut tx.body {
            *seller_sig = seller_signer.sign(&msg);
            *buyer_sig = buyer.signer.sign(&msg);
        }
        tx
    }

    pub fn trade(
        seller: &Identity,
        buyer: &Identity,
        cid: Cid,
        data_hash: Hash32,
        buyer_rating: f64,
        at: Tick,
    ) -> Self {
        Self::trade_with_keys(
            seller.signer.as_ref(),
            seller.public_key(),
            buyer,
            cid,
            data_hash,
            buyer_rating,
            at,
        )
    }

    pub fn sensory(device: &Identity, cid: Cid, readings: Vec<f64>, at: Tick) -> Self {
        let mut tx = Transaction {
            submitted_at: at,
            body: TxBody::Sensory {
                cid,
                data_hash: readings_hash(&readings),
                device_id: device.id.clone(),
                device_sig: Signature::default(),
                readings,
            },
        };
        let msg = tx.signing_bytes();
        if let TxBody::Sensory { device_sig, .. } = &mut tx.body {
            *device_sig = device.signer.sign(&msg);
        }
        tx
    }

    pub fn regulator_rating(
        regulator: &Identity,
        seller_id: ParticipantId,
        commodity_type: impl Into<String>,
        evidence_hash: Hash32,
        rating: f64,
        at: Tick,
    ) -> Self {
        let mut tx = Transaction {
            submitted_at: at,
            body: TxBody::RegulatorRating {
                regulator_id: regulator.id.clone(),
                seller_id,
                data_hash: evidence_hash,
                commodity_type: commodity_type.into(),
                rating,
                issued_at: at,
                sig: Signature::default(),
            },
        };
        let msg = tx.signing_bytes();
        if let TxBody::RegulatorRating { sig, .. } = &mut tx.body {
            *sig = regulator.signer.sign(&msg);
        }
        tx
    }

    pub fn receipt(retailer: &Identity, cid: Cid, at: Tick) -> Self {
        let mut tx = Transaction {
            submitted_at: at,
            body: TxBody::Receipt {
                cid,
                retailer_sig: Signature::default(),
                retailer_pub: retailer.public_key(),
            },
        };
        let msg = tx.signing_bytes();
        if let TxBody::Receipt { retailer_sig, .. } = &mut tx.body {
            *retailer_sig = retailer.signer.sign(&msg);
        }
        tx
    }

    pub fn revoke(admin: &Identity, participant_id: ParticipantId, at: Tick) -> Self {
        Self::status_change(admin, participant_id, at, true)
    }

    pub fn resume(admin: &Identity, participant_id: ParticipantId, at: Tick) -> Self {
        Self::status_change(admin, participant_id, at, false)
    }

    fn status_change(admin: &Identity, participant_id: ParticipantId, at: Tick, revoke: bool) -> Self {
        let admin_id = admin.id.clone();
        let sig = Signature::default();
        let mut tx = Transaction {
            submitted_at: at,
            body: if revoke {
                TxBody::Revoke { admin_id, participant_id, sig }
            } else {
                TxBody::Resume { admin_id, participant_id, sig }
            },
        };
        let msg = tx.signing_bytes();
        if let TxBody::Revoke { sig, .. } | TxBody::Resume { sig, .. } = &mut tx.body {
            *sig = admin.signer.sign(&msg);
        }
        tx
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub height: u64,
    pub prev_hash: Hash32,
    pub timestamp: Tick,
    pub tx_ids: Vec<TxId>,
    pub body_hash: Hash32,
    pub transactions: Vec<Transaction>,
}

impl Block {
    pub fn body_hash_of(transactions: &[Transaction]) -> Hash32 {
        let mut enc = Encoder::new();
        enc.seq(transactions);
        tagged_hash("trustchain/block-body", enc.as_slice())
    }

    pub fn new(height: u64, prev_hash: Hash32, timestamp: Tick, transactions: Vec<Transaction>) -> Self {
        Block {
            height,
            prev_hash,
            timestamp,
            tx_ids: transactions.iter().map(Transaction::id).collect(),
            body_hash: Self::body_hash_of(&transactions),
            transactions,
        }
    }

    pub fn genesis() -> Self {
        Self::new(0, Hash32::ZERO, 0, Vec::new())
    }

    /// Digest of the header. The next block's `prev_hash` must equal it.
    pub fn hash(&self) -> Hash32 {
        let mut enc = Encoder::new();
        enc.u64(self.height)
            .put(&self.prev_hash)
            .u64(self.timestamp)
            .seq(&self.tx_ids)
            .put(&self.body_hash);
        tagged_hash("trustchain/block-header", enc.as_slice())
    }

    /// Recomputes the body digest and transaction ids against the stored ones.
    pub fn is_internally_consistent(&self) -> bool {
        self.tx_ids.len() == self.transactions.len()
            && self
                .transactions
                .iter()
                .zip(&self.tx_ids)
                .all(|(tx, id)| tx.id() == *id)
            && Self::body_hash_of(&self.transactions) == self.body_hash
    }
}

impl Encode for Block {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(self.height)
            .put(&self.prev_hash)
            .u64(self.timestamp)
            .seq(&self.tx_ids)
            .put(&self.body_hash)
            .seq(&self.transactions);
    }
}

impl Decode for Block {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Block {
            height: dec.u64()?,
            prev_hash: dec.get()?,
            timestamp: dec.u64()?,
            tx_ids: dec.seq()?,
            body_hash: dec.get()?,
            transactions: dec.seq()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::SignatureScheme;
    use proptest::prelude::*;

    fn ident(name: &str) -> Identity {
        Identity::new(
            ParticipantId::new(name).unwrap(),
            SignatureScheme::Digest.signer_from_seed(name.as_bytes()),
        )
    }

    #[test]
    fn empty_ids_rejected() {
        assert!(ParticipantId::new("").is_none());
        assert!(Cid::new("  ").is_none());
        assert!("".parse::<ContractId>().is_err());
    }

    #[test]
    fn tx_id_is_content_addressed() {
        let a = ident("a");
        let b = ident("b");
        let cid = Cid::new("c1").unwrap();
        let t1 = Transaction::trade(&a, &b, cid.clone(), Hash32::ZERO, 0.5, 3);
        let t2 = Transaction::trade(&a, &b, cid.clone(), Hash32::ZERO, 0.5, 3);
        let t3 = Transaction::trade(&a, &b, cid, Hash32::ZERO, 0.6, 3);
        assert_eq!(t1.id(), t2.id());
        assert_ne!(t1.id(), t3.id());
    }

    #[test]
    fn signing_bytes_exclude_signatures() {
        let a = ident("a");
        let mut tx = Transaction::receipt(&a, Cid::new("c").unwrap(), 1);
        let before = tx.signing_bytes();
        if let TxBody::Receipt { retailer_sig, .. } = &mut tx.body {
            retailer_sig.0[0] ^= 1;
        }
        assert_eq!(before, tx.signing_bytes());
    }

    #[test]
    fn block_hash_covers_header_fields() {
        let g = Block::genesis();
        let mut b = Block::new(1, g.hash(), 5, vec![]);
        let h = b.hash();
        b.timestamp = 6;
        assert_ne!(h, b.hash());
        assert!(b.is_internally_consistent());
    }

    fn arb_tx() -> impl Strategy<Value = Transaction> {
        let names = prop::sample::select(vec!["p", "s", "r", "g", "reg", "adm"]);
        (names.clone(), names, 0u64..1000, any::<f64>(), prop::collection::vec(-40.0f64..40.0, 0..5), 0u8..7)
            .prop_map(|(x, y, t, r, readings, k)| {
                let (a, b) = (ident(x), ident(y));
                let cid = Cid::new(format!("c{t}")).unwrap();
                match k {
                    0 => Transaction::create(&a, cid, Hash32::ZERO, ContractId::new("q").unwrap(), t),
                    1 => Transaction::trade(&a, &b, cid, Hash32([7; 32]), r, t),
                    2 => Transaction::sensory(&a, cid, readings, t),
                    3 => Transaction::regulator_rating(&a, b.id.clone(), "fish", Hash32::ZERO, r, t),
                    4 => Transaction::receipt(&a, cid, t),
                    5 => Transaction::revoke(&a, b.id.clone(), t),
                    _ => Transaction::resume(&a, b.id.clone(), t),
                }
            })
    }

    proptest! {
        #[test]
        fn transaction_codec_is_canonical(tx in arb_tx()) {
            let bytes = tx.to_canonical_bytes();
            let back = Transaction::from_canonical_bytes(&bytes).unwrap();
            prop_assert_eq!(back.to_canonical_bytes(), bytes);
            prop_assert_eq!(back.id(), tx.id());
        }
    }
}
