mod common;

use common::{cid, ident, pid, Net};
use trustchain_core::application::{
    publish, publish_revoked_list, publish_rewards, query, request_trust_recompute, resume, revoke, AppError, Issuer,
    PublicationKind, PublicationPayload, Query, QueryResult,
};
use trustchain_core::crypto::{Hash32, SignatureScheme};
use trustchain_core::ledger::{Operation, QueryKind, RejectReason, Role, Status, Subject, Transaction, Verdict};
use trustchain_core::Event;

fn poc_like() -> Net {
    let mut net = Net::digest_default();
    net.commit(net.create("c1", 1), 1);
    net.commit(Transaction::sensory(&net.gateway, cid("c1"), vec![-10.0; 3], 2), 2);
    net.commit(Transaction::trade(&net.producer, &net.shipper, cid("c1"), Hash32::ZERO, 0.9, 3), 3);
    net.commit(Transaction::trade(&net.shipper, &net.retailer, cid("c1"), Hash32::ZERO, 0.8, 5), 5);
    net
}

fn ask(net: &Net, who: Issuer, q: Query, now: u64) -> Result<QueryResult, AppError> {
    query(net.ledger.state(), net.ledger.acl(), &who, &q, now)
}

fn admin(net: &Net) -> Issuer {
    Issuer::Member(net.admin.id.clone())
}

#[test]
fn provenance_and_rating_queries() {
    let mut net = poc_like();
    let r = ask(&net, admin(&net), Query::ProvenanceTrail { cid: cid("c1") }, 6).unwrap();
    let QueryResult::Provenance { owners, .. } = r else { panic!() };
    assert_eq!(owners, vec![pid("producer"), pid("shipper"), pid("retailer")]);

    let err = ask(&net, Issuer::Consumer, Query::OverallCommodityRating { cid: cid("c1") }, 6).unwrap_err();
    assert_eq!(err, AppError::ChainIncomplete(cid("c1")));

    net.commit(Transaction::receipt(&net.retailer, cid("c1"), 7), 7);
    let r = ask(&net, Issuer::Consumer, Query::OverallCommodityRating { cid: cid("c1") }, 8).unwrap();
    let QueryResult::CommodityRating { rating, .. } = r else { panic!() };
    // segments: three in-band readings, then nothing
    assert!((rating.value - (1.0 + 0.5) / 2.0).abs() < 1e-12);

    let err = ask(&net, Issuer::Consumer, Query::ProvenanceTrail { cid: cid("c1") }, 8).unwrap_err();
    assert!(matches!(err, AppError::Unauthorized(_)));
    let err = ask(&net, admin(&net), Query::ProvenanceTrail { cid: cid("zz") }, 8).unwrap_err();
    assert!(matches!(err, AppError::NotFound(_)));
}

#[test]
fn top_traders_and_incomplete_chains() {
    let mut net = poc_like();
    net.commit(net.create("c2", 2), 2);
    net.commit(Transaction::trade(&net.producer, &net.shipper, cid("c2"), Hash32::ZERO, 0.9, 4), 4);
    let top = |k| ask(&net, admin(&net), Query::TopTraders { commodity_type: "frozen".into(), k }, 10).unwrap();
    assert_eq!(
        top(0),
        QueryResult::TopTraders { commodity_type: "frozen".into(), traders: vec![] }
    );
    assert_eq!(
        top(5),
        QueryResult::TopTraders {
            commodity_type: "frozen".into(),
            traders: vec![(pid("producer"), 2), (pid("shipper"), 1)]
        }
    );

    net.commit(net.create("fake", 3), 3);
    let r = ask(&net, admin(&net), Query::IncompleteChains { older_than: 5 }, 9).unwrap();
    // c1 last moved at 5, c2 at 4, fake at 3
    assert_eq!(r, QueryResult::IncompleteChains { cids: vec![cid("fake")] });
    let r = ask(&net, admin(&net), Query::IncompleteChains { older_than: 0 }, 9).unwrap();
    assert_eq!(r, QueryResult::IncompleteChains { cids: vec![cid("c1"), cid("c2"), cid("fake")] });
}

#[test]
fn authorization_matches_the_ledger_rules() {
    let net = poc_like();
    let subjects: Vec<(Issuer, Subject)> = std::iter::once((Issuer::Consumer, Subject::Consumer))
        .chain(
            [
                ("admin", Role::Admin),
                ("producer", Role::PrimaryProducer),
                ("shipper", Role::Logistics),
                ("retailer", Role::Retailer),
                ("regulator", Role::Regulator),
                ("gateway", Role::GatewayDevice),
            ]
            .map(|(n, r)| (Issuer::Member(pid(n)), Subject::Member(r))),
        )
        .collect();
    let queries = [
        Query::CommoditySensorHistory { cid: cid("c1") },
        Query::ProvenanceTrail { cid: cid("c1") },
        Query::IncompleteChains { older_than: 0 },
        Query::TopTraders { commodity_type: "frozen".into(), k: 3 },
        Query::RevokedList,
        Query::TraderTrust { id: pid("producer"), commodity_type: "frozen".into() },
        Query::OverallCommodityRating { cid: cid("c1") },
    ];
    for (issuer, subject) in &subjects {
        for q in &queries {
            let permitted = net.ledger.acl().permits(*subject, Operation::Query(q.kind()));
            let denied = matches!(ask(&net, issuer.clone(), q.clone(), 6), Err(AppError::Unauthorized(_)));
            assert_eq!(permitted, !denied, "{issuer:?} {:?}", q.kind());
        }
    }
    assert!(!net.ledger.acl().permits(Subject::Consumer, Operation::Query(QueryKind::TraderTrust)));
    let err = ask(&net, Issuer::Member(pid("ghost")), Query::RevokedList, 6).unwrap_err();
    assert!(matches!(err, AppError::Unauthorized(_)));
}

#[test]
fn recompute_matches_oracle() {
    let mut net = Net::digest_default();
    let mut expected = Vec::new();
    for (i, rating) in [0.9, 0.4, 0.7].into_iter().enumerate() {
        let at = 1 + 2 * i as u64;
        let c = format!("c{i}");
        net.commit(net.create(&c, at), at);
        net.commit(Transaction::trade(&net.producer, &net.shipper, cid(&c), Hash32::ZERO, rating, at + 1), at + 1);
        // no readings and no regulator: 0.5 * neutral + 0.5 * rating
        expected.push((at + 1, 0.25 + 0.5 * rating));
    }
    let t_n = 20;
    let (r, t) = request_trust_recompute(&mut net.ledger, &pid("admin"), &pid("producer"), "frozen", t_n).unwrap();
    let oracle_r: f64 = expected.iter().map(|(tick, v)| v * (-0.05 * (t_n - tick) as f64).exp()).sum();
    // three successful trades fall in the 1-3 band
    let oracle_t = oracle_r + 0.1 * 0.5;
    assert!((r - oracle_r).abs() < 1e-12);
    assert!((t - oracle_t).abs() < 1e-12);
    let cached = net.ledger.state().trust.profiles[&pid("producer")].by_type["frozen"].cached.unwrap();
    assert_eq!((cached.reputation, cached.trust, cached.computed_at), (r, t, t_n));

    // regulators may ask too
    request_trust_recompute(&mut net.ledger, &pid("regulator"), &pid("producer"), "frozen", t_n).unwrap();
    let err = request_trust_recompute(&mut net.ledger, &pid("shipper"), &pid("producer"), "frozen", t_n).unwrap_err();
    assert!(matches!(err, AppError::Unauthorized(_)));
    let err = request_trust_recompute(&mut net.ledger, &pid("admin"), &pid("nobody"), "frozen", t_n).unwrap_err();
    assert_eq!(err, AppError::UnknownSeller(pid("nobody")));
}

#[test]
fn revoke_and_resume() {
    let mut net = Net::digest_default();
    net.commit(net.create("c1", 1), 1);
    let admin = net.admin.clone();
    revoke(&mut net.ledger, &admin, &pid("producer"), 2).unwrap();
    assert_eq!(net.ledger.state().participant(&pid("producer")).unwrap().status, Status::Revoked);
    assert_eq!(
        revoke(&mut net.ledger, &admin, &pid("producer"), 3).unwrap_err(),
        AppError::AlreadyRevoked(pid("producer"))
    );
    let tr = Transaction::trade(&net.producer, &net.shipper, cid("c1"), Hash32::ZERO, 0.9, 4);
    assert_eq!(
        net.ledger.validate(&tr),
        Verdict::Reject(RejectReason::ParticipantRevoked(pid("producer")))
    );
    let pubd = publish_revoked_list(net.ledger.state(), 4);
    assert_eq!(pubd.payload, PublicationPayload::Revoked { ids: vec![pid("producer")] });

    // a non-admin cannot revoke
    let shipper = net.shipper.clone();
    assert!(matches!(
        revoke(&mut net.ledger, &shipper, &pid("retailer"), 4),
        Err(AppError::Unauthorized(_))
    ));
    assert_eq!(
        resume(&mut net.ledger, &admin, &pid("shipper"), 5).unwrap_err(),
        AppError::NotRevoked(pid("shipper"))
    );
    resume(&mut net.ledger, &admin, &pid("producer"), 50).unwrap();
    assert_eq!(net.ledger.state().participant(&pid("producer")).unwrap().status, Status::Active);
    let tr = Transaction::trade(&net.producer, &net.shipper, cid("c1"), Hash32::ZERO, 0.9, 51);
    assert!(net.ledger.validate(&tr).is_accept());
}

#[test]
fn whitewashing_needs_the_admin() {
    let mut net = Net::digest_default();
    let admin = net.admin.clone();
    revoke(&mut net.ledger, &admin, &pid("producer"), 2).unwrap();
    let fresh = ident(SignatureScheme::Digest, "producer-new");
    // the revoked trader cannot enrol itself under a new name
    assert!(net
        .ledger
        .register_participant(&pid("producer"), "producer-new", Role::PrimaryProducer, fresh.public_key(), 3)
        .is_err());
    // nor re-enrol its old key through the admin
    assert!(net
        .ledger
        .register_participant(&admin.id, "producer-new", Role::PrimaryProducer, net.producer.public_key(), 3)
        .is_err());
}

#[test]
fn rewards_publication() {
    let mut net = Net::digest_default();
    assert_eq!(
        publish_rewards(net.ledger.state(), 3, 0).payload,
        PublicationPayload::HighTrust { by_type: Default::default() }
    );
    let p2 = ident(SignatureScheme::Digest, "p2");
    let p3 = ident(SignatureScheme::Digest, "p3");
    let admin = net.admin.id.clone();
    for p in [&p2, &p3] {
        net.ledger
            .register_participant(&admin, p.id.as_str(), Role::PrimaryProducer, p.public_key(), 0)
            .unwrap();
    }
    // producer rated 0.9, p2 and p3 both 0.5 at the same tick
    for (i, (seller, rating)) in [(&net.producer.clone(), 0.9), (&p2, 0.5), (&p3, 0.5)].into_iter().enumerate() {
        let c = format!("c{i}");
        let tx = Transaction::create(seller, cid(&c), Hash32::ZERO, net.contract.clone(), 1);
        net.commit(tx, 1);
        let tr = Transaction::trade(seller, &net.shipper, cid(&c), Hash32::ZERO, rating, 2);
        net.commit(tr, 2);
    }
    net.ledger.append_block(vec![], 60).unwrap();
    let top1 = publish_rewards(net.ledger.state(), 1, 60);
    assert_eq!(top1.kind, PublicationKind::HighTrustList);
    let PublicationPayload::HighTrust { by_type } = &top1.payload else { panic!() };
    assert_eq!(by_type["frozen"].len(), 1);
    assert_eq!(by_type["frozen"][0].id, pid("producer"));
    let top3 = publish_rewards(net.ledger.state(), 3, 60);
    let PublicationPayload::HighTrust { by_type } = &top3.payload else { panic!() };
    let ids: Vec<_> = by_type["frozen"].iter().map(|r| r.id.as_str()).collect();
    assert_eq!(ids, ["producer", "p2", "p3"]);
    assert_eq!(by_type["frozen"][1].trust, by_type["frozen"][2].trust);

    publish(&mut net.ledger, top3.clone());
    assert!(net.ledger.events().iter().any(|e| *e == Event::Publication(top3.clone())));
}
