use serde::{Deserialize, Serialize};

use crate::crypto::{Key128, NodeId, SealedPacket, KEY_BYTES, NODE_ID_BYTES};

use super::ProtocolError;

/// Customized HELLO broadcast by a third party.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TpAdvert {
    pub tp_id: NodeId,
    pub disclosed_link: Key128,
}

/// Every over-the-air packet. Wire form is a one-byte tag followed by the
/// variant's fixed field set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Message {
    Hello { sender: NodeId, nonce: u64 },
    HelloAck { sender: NodeId, nonce_echo: u64, has_tp: bool },
    TpAdvert(TpAdvert),
    KeyRequest { sender: NodeId, sealed: SealedPacket },
    KeyResponse { tp_id: NodeId, sealed: SealedPacket },
    KeyConfirm { sender: NodeId, sealed: SealedPacket },
    Provision { sealed: SealedPacket },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MessageTag {
    Hello = 1,
    HelloAck = 2,
    TpAdvert = 3,
    KeyRequest = 4,
    KeyResponse = 5,
    KeyConfirm = 6,
    Provision = 7,
}

impl MessageTag {
    pub fn name(self) -> &'static str {
        match self {
            MessageTag::Hello => "hello",
            MessageTag::HelloAck => "hello_ack",
            MessageTag::TpAdvert => "tp_advert",
            MessageTag::KeyRequest => "key_request",
            MessageTag::KeyResponse => "key_response",
            MessageTag::KeyConfirm => "key_confirm",
            MessageTag::Provision => "provision",
        }
    }
}

impl Message {
    pub fn tag(&self) -> MessageTag {
        match self {
            Message::Hello { .. } => MessageTag::Hello,
            Message::HelloAck { .. } => MessageTag::HelloAck,
            Message::TpAdvert(_) => MessageTag::TpAdvert,
            Message::KeyRequest { .. } => MessageTag::KeyRequest,
            Message::KeyResponse { .. } => MessageTag::KeyResponse,
            Message::KeyConfirm { .. } => MessageTag::KeyConfirm,
            Message::Provision { .. } => MessageTag::Provision,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = vec![self.tag() as u8];
        match self {
            Message::Hello { sender, nonce } => {
                out.extend_from_slice(&sender.to_bytes());
                out.extend_from_slice(&nonce.to_be_bytes());
            }
            Message::HelloAck { sender, nonce_echo, has_tp } => {
                out.extend_from_slice(&sender.to_bytes());
                out.extend_from_slice(&nonce_echo.to_be_bytes());
                out.push(u8::from(*has_tp));
            }
            Message::TpAdvert(a) => {
                out.extend_from_slice(&a.tp_id.to_bytes());
                out.extend_from_slice(a.disclosed_link.as_bytes());
            }
            Message::KeyRequest { sender: id, sealed }
            | Message::KeyResponse { tp_id: id, sealed }
            | Message::KeyConfirm { sender: id, sealed } => {
                out.extend_from_slice(&id.to_bytes());
                out.extend_from_slice(&sealed.to_bytes());
            }
            Message::Provision { sealed } => out.extend_from_slice(&sealed.to_bytes()),
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Message, ProtocolError> {
        let (&tag, body) = bytes.split_first().ok_or(ProtocolError::Malformed("empty packet"))?;
        let mut r = Reader { buf: body };
        let msg = match tag {
            1 => Message::Hello { sender: r.id()?, nonce: r.u64()? },
            2 => Message::HelloAck {
                sender: r.id()?,
                nonce_echo: r.u64()?,
                has_tp: match r.take(1)?[0] {
                    0 => false,
                    1 => true,
                    _ => return Err(ProtocolError::Malformed("bad flag")),
                },
            },
            3 => Message::TpAdvert(TpAdvert { tp_id: r.id()?, disclosed_link: r.key()? }),
            4 => Message::KeyRequest { sender: r.id()?, sealed: r.sealed()? },
            5 => Message::KeyResponse { tp_id: r.id()?, sealed: r.sealed()? },
            6 => Message::KeyConfirm { sender: r.id()?, sealed: r.sealed()? },
            7 => Message::Provision { sealed: r.sealed()? },
            other => return Err(ProtocolError::UnknownTag(other)),
        };
        r.finish()?;
        Ok(msg)
    }
}

pub(crate) struct Reader<'a> {
    pub(crate) buf: &'a [u8],
}

impl<'a> Reader<'a> {
    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8], ProtocolError> {
        if self.buf.len() < n {
            return Err(ProtocolError::Malformed("truncated"));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    pub(crate) fn id(&mut self) -> Result<NodeId, ProtocolError> {
        Ok(NodeId::from_bytes(self.take(NODE_ID_BYTES)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64, ProtocolError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Result<u32, ProtocolError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u16(&mut self) -> Result<u16, ProtocolError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub(crate) fn key(&mut self) -> Result<Key128, ProtocolError> {
        Ok(Key128::from_slice(self.take(KEY_BYTES)?).unwrap())
    }

    fn sealed(&mut self) -> Result<SealedPacket, ProtocolError> {
        let (packet, used) = SealedPacket::from_bytes(self.buf)?;
        self.buf = &self.buf[used..];
        Ok(packet)
    }

    pub(crate) fn finish(&self) -> Result<(), ProtocolError> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(ProtocolError::Malformed("trailing bytes"))
        }
    }
}

/// Plaintext of a key request: `requester(8) ‖ count(2) ‖ peer(8)*`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RequestPayload {
    pub requester: NodeId,
    pub peers: Vec<NodeId>,
}

impl RequestPayload {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(10 + 8 * self.peers.len());
        out.extend_from_slice(&self.requester.to_bytes());
        out.extend_from_slice(&(self.peers.len() as u16).to_be_bytes());
        for p in &self.peers {
            out.extend_from_slice(&p.to_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ProtocolError> {
        let mut r = Reader { buf: bytes };
        let requester = r.id()?;
        let count = r.u16()? as usize;
        let peers = (0..count).map(|_| r.id()).collect::<Result<Vec<_>, _>>()?;
        r.finish()?;
        Ok(RequestPayload { requester, peers })
    }
}

/// `a(8) ‖ b(8) ‖ key(16)`: the body of both key responses (requester,
/// peer, share) and key confirmations (initiator, responder, link key).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairPayload {
    pub first: NodeId,
    pub second: NodeId,
    pub key: Key128,
}

impl PairPayload {
    pub fn encode(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        out[..8].copy_from_slice(&self.first.to_bytes());
        out[8..16].copy_from_slice(&self.second.to_bytes());
        out[16..].copy_from_slice(self.key.as_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ProtocolError> {
        let mut r = Reader { buf: bytes };
        let p = PairPayload { first: r.id()?, second: r.id()?, key: r.key()? };
        r.finish()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::seal;
    use proptest::prelude::*;

    fn samples() -> Vec<Message> {
        let sealed = seal(&Key128::from_bytes([1; 16]), NodeId(3), b"payload");
        vec![
            Message::Hello { sender: NodeId(1), nonce: 99 },
            Message::HelloAck { sender: NodeId(2), nonce_echo: 99, has_tp: true },
            Message::TpAdvert(TpAdvert { tp_id: NodeId(5), disclosed_link: Key128::from_bytes([7; 16]) }),
            Message::KeyRequest { sender: NodeId(1), sealed: sealed.clone() },
            Message::KeyResponse { tp_id: NodeId(5), sealed: sealed.clone() },
            Message::KeyConfirm { sender: NodeId(1), sealed: sealed.clone() },
            Message::Provision { sealed },
        ]
    }

    #[test]
    fn every_variant_round_trips() {
        for m in samples() {
            assert_eq!(Message::decode(&m.encode()).unwrap(), m);
        }
    }

    #[test]
    fn unknown_tags_and_trailing_bytes_rejected() {
        assert_eq!(Message::decode(&[0]), Err(ProtocolError::UnknownTag(0)));
        assert_eq!(Message::decode(&[42, 1, 2]), Err(ProtocolError::UnknownTag(42)));
        let mut bytes = samples()[0].encode();
        bytes.push(0);
        assert!(matches!(Message::decode(&bytes), Err(ProtocolError::Malformed(_))));
        assert!(matches!(Message::decode(&[]), Err(ProtocolError::Malformed(_))));
    }

    proptest! {
        #[test]
        fn decode_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..80)) {
            let _ = Message::decode(&bytes);
        }

        #[test]
        fn request_payload_round_trip(req in any::<u64>(), peers in proptest::collection::vec(any::<u64>(), 0..50)) {
            let p = RequestPayload { requester: NodeId(req), peers: peers.into_iter().map(NodeId).collect() };
            prop_assert_eq!(RequestPayload::decode(&p.encode()).unwrap(), p);
        }
    }
}
