#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace formulafind::detail {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

inline void put_u16(std::string& out, std::uint16_t v) { out.append(reinterpret_cast<const char*>(&v), 2); }
inline void put_u32(std::string& out, std::uint32_t v) { out.append(reinterpret_cast<const char*>(&v), 4); }
inline void put_f32(std::string& out, float v) { out.append(reinterpret_cast<const char*>(&v), 4); }

// Bounds-checked cursor over a byte buffer. Reads return false on underrun.
class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::size_t remaining() const { return bytes_.size() - pos_; }

    bool raw(void* dst, std::size_t n) {
        if (remaining() < n) return false;
        std::memcpy(dst, bytes_.data() + pos_, n);
        pos_ += n;
        return true;
    }
    bool u16(std::uint16_t& v) { return raw(&v, 2); }
    bool u32(std::uint32_t& v) { return raw(&v, 4); }
    bool f32(float* dst, std::size_t count) { return raw(dst, count * 4); }
    bool bytes(std::string& dst, std::size_t n) {
        if (remaining() < n) return false;
        dst.assign(bytes_.substr(pos_, n));
        pos_ += n;
        return true;
    }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

} // namespace formulafind::detail
