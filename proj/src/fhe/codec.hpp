#pragma once

#include "json.hpp"
#include "oblimon/fhe.hpp"

namespace oblimon::fhe {

/// JSON-value level (de)serialization shared by the string API and the protocol.
struct Codec {
    static nlohmann::json encode(const Tlwe &c);
    static nlohmann::json encode(const Trgsw &c);
    static nlohmann::json encode(const Trlwe &c);
    static Tlwe decode_tlwe(const nlohmann::json &j);
    static Trgsw decode_trgsw(const nlohmann::json &j);
    static Trlwe decode_trlwe(const nlohmann::json &j);

    static nlohmann::json encode(const NoiseParams &p);
    static NoiseParams decode_params(const nlohmann::json &j);
    static nlohmann::json encode(const CloudKeys &k);
    static CloudKeys decode_keys(const nlohmann::json &j);

private:
    static void fill_meta(CiphertextMeta &c, const nlohmann::json &j);
};

} // namespace oblimon::fhe
