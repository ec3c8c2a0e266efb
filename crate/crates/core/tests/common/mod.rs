#![allow(dead_code)]

use trustchain_core::contracts::QualityContract;
use trustchain_core::crypto::{Hash32, SignatureScheme};
use trustchain_core::ledger::{Cid, ContractId, Identity, Ledger, LedgerConfig, ParticipantId, Role, Transaction};

pub fn pid(s: &str) -> ParticipantId {
    ParticipantId::new(s).unwrap()
}

pub fn cid(s: &str) -> Cid {
    Cid::new(s).unwrap()
}

pub fn ident(scheme: SignatureScheme, name: &str) -> Identity {
    Identity::new(pid(name), scheme.signer_from_seed(format!("fixture/{name}").as_bytes()))
}

/// A small consortium: admin, producer, shipper, retailer, regulator,
/// gateway, and a frozen-goods contract.
pub struct Net {
    pub ledger: Ledger,
    pub admin: Identity,
    pub producer: Identity,
    pub shipper: Identity,
    pub retailer: Identity,
    pub regulator: Identity,
    pub gateway: Identity,
    pub contract: ContractId,
}

impl Net {
    pub fn new(config: LedgerConfig) -> Self {
        let scheme = config.scheme;
        let admin = ident(scheme, "admin");
        let mut ledger = Ledger::new(config, vec![(admin.id.clone(), admin.public_key())]).unwrap();
        let mut reg = |name: &str, role| {
            let id = ident(scheme, name);
            ledger
                .register_participant(&admin.id, name, role, id.public_key(), 0)
                .unwrap();
            id
        };
        let producer = reg("producer", Role::PrimaryProducer);
        let shipper = reg("shipper", Role::Logistics);
        let retailer = reg("retailer", Role::Retailer);
        let regulator = reg("regulator", Role::Regulator);
        let gateway = reg("gateway", Role::GatewayDevice);
        let contract = ContractId::new("frozen-qc").unwrap();
        ledger
            .instantiate_quality_contract(
                &admin.id,
                QualityContract::new(contract.clone(), "frozen", -25.0, -18.0, 0.0, 4.0).unwrap(),
                0,
            )
            .unwrap();
        Net { ledger, admin, producer, shipper, retailer, regulator, gateway, contract }
    }

    pub fn digest_default() -> Self {
        Self::new(LedgerConfig { scheme: SignatureScheme::Digest, ..Default::default() })
    }

    pub fn create(&self, c: &str, at: u64) -> Transaction {
        Transaction::create(&self.producer, cid(c), Hash32([c.len() as u8; 32]), self.contract.clone(), at)
    }

    pub fn commit(&mut self, tx: Transaction, at: u64) {
        let ts = at.max(self.ledger.chain().tip().timestamp);
        self.ledger.append_block(vec![tx], ts).unwrap();
    }
}
