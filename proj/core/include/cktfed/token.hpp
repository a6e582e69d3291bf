#pragma once

#include "cktfed/netlist.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace cktfed {

enum class TokenKind { DevicePin, Terminal, SubcircuitPin, TypeTag, Special, Invalid };

/// Device family observable from a pin token. NPN and PNP share the Q prefix.
enum class DeviceClass { NMOS, PMOS, BJT, R, C, L, D };

struct TokenInfo {
    TokenKind kind = TokenKind::Invalid;
    // DevicePin
    std::string device_id;
    DeviceClass device_class = DeviceClass::NMOS;
    PinRole role = PinRole::A;
    // Terminal
    std::string_view terminal_class;
    // SubcircuitPin: SG<pattern>[_<instance>]<role>
    int pattern = 0;
    int instance = 1;
    std::string sg_role;
};

TokenInfo classify_token(std::string_view token);

std::string_view to_string(DeviceClass cls);
std::string_view class_prefix(DeviceClass cls);
std::span<const PinRole> class_roles(DeviceClass cls);
DeviceClass device_class_of(DeviceKind kind);
std::optional<DeviceClass> device_class_from_name(std::string_view name);

/// Kind label used for mining and isomorphism: "NMOS.D", "BJT.C", "VDD", "VIN", "SG1.termA".
std::string node_label(std::string_view token);

std::string type_tag(CircuitType type);
std::optional<CircuitType> parse_type_tag(std::string_view token);

/// Builds the subcircuit interface token for an instance (instance 1 has no suffix).
std::string subcircuit_token(int pattern, int instance, std::string_view role);

} // namespace cktfed
