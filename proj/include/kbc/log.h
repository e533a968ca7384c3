#ifndef KBC_LOG_H_
#define KBC_LOG_H_

#include <cstddef>
#include <string_view>

namespace kbc {

// Warnings go to stderr unless silenced (tests silence them).
void Warn(std::string_view message);
void Info(std::string_view message);
void SetLogQuiet(bool quiet);
// Warnings issued so far, counted even when quiet.
std::size_t WarningCount();

}  // namespace kbc

#endif  // KBC_LOG_H_
