#include "gate/service.hpp"

int main(int argc, char** argv) { return gate::service::server_main(argc, argv); }
