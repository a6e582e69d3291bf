#include "cktfed/token.hpp"

#include <cctype>

namespace cktfed {

namespace {

constexpr PinRole kMos[] = {PinRole::D, PinRole::G, PinRole::S, PinRole::B};
constexpr PinRole kBjt[] = {PinRole::C, PinRole::B, PinRole::E};
constexpr PinRole kTwo[] = {PinRole::A, PinRole::B};


} // namespace

std::string_view to_string(DeviceClass cls) {
    switch (cls) {
    case DeviceClass::NMOS: return "NMOS";
    case DeviceClass::PMOS: return "PMOS";
    case DeviceClass::BJT: return "BJT";
    case DeviceClass::R: return "R";
    case DeviceClass::C: return "C";
    case DeviceClass::L: return "L";
    case DeviceClass::D: return "D";
    }
    return "?";
}

std::string_view class_prefix(DeviceClass cls) {
    switch (cls) {
    case DeviceClass::NMOS: return "NM";
    case DeviceClass::PMOS: return "PM";
    case DeviceClass::BJT: return "Q";
    case DeviceClass::R: return "R";
    case DeviceClass::C: return "C";
    case DeviceClass::L: return "L";
    case DeviceClass::D: return "D";
    }
    return "";
}

std::span<const PinRole> class_roles(DeviceClass cls) {
    switch (cls) {
    case DeviceClass::NMOS:
    case DeviceClass::PMOS: return kMos;
    case DeviceClass::BJT: return kBjt;
    default: return kTwo;
    }
}

DeviceClass device_class_of(DeviceKind kind) {
    switch (kind) {
    case DeviceKind::NMOS: return DeviceClass::NMOS;
    case DeviceKind::PMOS: return DeviceClass::PMOS;
    case DeviceKind::NPN:
    case DeviceKind::PNP: return DeviceClass::BJT;
    case DeviceKind::R: return DeviceClass::R;
    case DeviceKind::C: return DeviceClass::C;
    case DeviceKind::L: return DeviceClass::L;
    case DeviceKind::D: return DeviceClass::D;
    }
    return DeviceClass::NMOS;
}

std::optional<DeviceClass> device_class_from_name(std::string_view name) {
    for (auto c : {DeviceClass::NMOS, DeviceClass::PMOS, DeviceClass::BJT, DeviceClass::R, DeviceClass::C,
                   DeviceClass::L, DeviceClass::D})
        if (to_string(c) == name) return c;
    return std::nullopt;
}

TokenInfo classify_token(std::string_view token) {
    TokenInfo info;
    if (token.empty()) return info;
    if (token.front() == '<' && token.back() == '>' && token.size() > 2) {
        info.kind = parse_type_tag(token) ? TokenKind::TypeTag : TokenKind::Special;
        return info;
    }
    if (!is_valid_net_name(token)) return info;
    if (auto cls = terminal_class(token); !cls.empty()) {
        info.kind = TokenKind::Terminal;
        info.terminal_class = cls;
        return info;
    }
    if (token.starts_with("SG")) {
        std::size_t i = 2;
        std::size_t start = i;
        while (i < token.size() && std::isdigit(static_cast<unsigned char>(token[i]))) ++i;
        if (i == start) return info;
        info.pattern = std::stoi(std::string(token.substr(start, i - start)));
        if (i < token.size() && token[i] == '_') {
            std::size_t s2 = ++i;
            while (i < token.size() && std::isdigit(static_cast<unsigned char>(token[i]))) ++i;
            if (i == s2) return info;
            info.instance = std::stoi(std::string(token.substr(s2, i - s2)));
        }
        if (i >= token.size() || std::isdigit(static_cast<unsigned char>(token[i]))) return info;
        info.sg_role = std::string(token.substr(i));
        info.kind = TokenKind::SubcircuitPin;
        return info;
    }
    DeviceClass cls;
    std::size_t prefix_len = 1;
    if (token.starts_with("NM")) { cls = DeviceClass::NMOS; prefix_len = 2; }
    else if (token.starts_with("PM")) { cls = DeviceClass::PMOS; prefix_len = 2; }
    else {
        switch (token.front()) {
        case 'Q': cls = DeviceClass::BJT; break;
        case 'R': cls = DeviceClass::R; break;
        case 'C': cls = DeviceClass::C; break;
        case 'L': cls = DeviceClass::L; break;
        case 'D': cls = DeviceClass::D; break;
        default: return info;
        }
    }
    if (token.size() < prefix_len + 2) return info;
    const char role = token.back();
    bool role_ok = false;
    for (auto r : class_roles(cls))
        if (static_cast<char>(r) == role) role_ok = true;
    if (!role_ok) return info;
    info.kind = TokenKind::DevicePin;
    info.device_class = cls;
    info.device_id = std::string(token.substr(0, token.size() - 1));
    info.role = static_cast<PinRole>(role);
    return info;
}

std::string node_label(std::string_view token) {
    auto info = classify_token(token);
    switch (info.kind) {
    case TokenKind::DevicePin:
        return std::string(to_string(info.device_class)) + "." + static_cast<char>(info.role);
    case TokenKind::Terminal: return std::string(info.terminal_class);
    case TokenKind::SubcircuitPin: return "SG" + std::to_string(info.pattern) + "." + info.sg_role;
    default: return std::string(token);
    }
}

std::string type_tag(CircuitType type) { return "<" + std::string(to_string(type)) + ">"; }

std::optional<CircuitType> parse_type_tag(std::string_view token) {
    if (token.size() < 3 || token.front() != '<' || token.back() != '>') return std::nullopt;
    return parse_circuit_type(token.substr(1, token.size() - 2));
}

std::string subcircuit_token(int pattern, int instance, std::string_view role) {
    std::string out = "SG" + std::to_string(pattern);
    if (instance > 1) out += "_" + std::to_string(instance);
    out += role;
    return out;
}

} // namespace cktfed
