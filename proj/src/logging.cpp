#include "meshcnn/logging.hpp"

#include <cstdio>

namespace meshcnn::logging {

namespace {
WarnHandler& handler_slot() {
    static WarnHandler handler;
    return handler;
}
} // namespace

void warn(const std::string& msg) {
    if (handler_slot()) {
        handler_slot()(msg);
    } else {
        std::fprintf(stderr, "[warn] %s\n", msg.c_str());
    }
}

void set_warn_handler(WarnHandler handler) { handler_slot() = std::move(handler); }

void reset_warn_handler() { handler_slot() = nullptr; }

} // namespace meshcnn::logging
