#include "openvlc/common.hpp"

namespace openvlc {

const char* to_string(Errc code)
{
    switch (code) {
    case Errc::InvalidPair: return "InvalidPair";
    case Errc::OddLength: return "OddLength";
    case Errc::WrongLength: return "WrongLength";
    case Errc::NoSync: return "NoSync";
    case Errc::BlockTooLarge: return "BlockTooLarge";
    case Errc::Uncorrectable: return "Uncorrectable";
    case Errc::PayloadTooLarge: return "PayloadTooLarge";
    case Errc::InvalidPayload: return "InvalidPayload";
    case Errc::BadLength: return "BadLength";
    case Errc::BadCrc: return "BadCrc";
    case Errc::QueueFull: return "QueueFull";
    case Errc::HalfDuplexViolation: return "HalfDuplexViolation";
    case Errc::IllegalEvent: return "IllegalEvent";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::NotInRxMode: return "NotInRxMode";
    case Errc::NotInTxMode: return "NotInTxMode";
    case Errc::NonPositiveDistance: return "NonPositiveDistance";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ParseError: return "ParseError";
    case Errc::ValidationError: return "ValidationError";
    }
    return "Unknown";
}

}  // namespace openvlc
