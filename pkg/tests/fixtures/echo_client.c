/* Fixture: pushes a deterministic byte stream through a TCP echo server
 * and prints a checksum of what was sent and what came back.  Output and
 * exit code depend only on the stream contents, so a traced run must
 * reproduce them byte for byte.
 *
 * usage: echo_client HOST PORT TOTAL_BYTES CHUNK
 */
#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <sys/socket.h>
#include <unistd.h>

#define FNV64_OFFSET 0xcbf29ce484222325ULL
#define FNV64_PRIME 0x100000001b3ULL

static uint64_t fnv64(uint64_t h, const unsigned char *p, size_t n)
{
    size_t i;
    for (i = 0; i < n; i++) {
        h ^= p[i];
        h *= FNV64_PRIME;
    }
    return h;
}

static int send_all(int fd, const unsigned char *p, size_t n)
{
    while (n) {
        ssize_t k = send(fd, p, n, 0);
        if (k <= 0)
            return -1;
        p += k;
        n -= (size_t)k;
    }
    return 0;
}

static int recv_all(int fd, unsigned char *p, size_t n)
{
    while (n) {
        ssize_t k = recv(fd, p, n, 0);
        if (k <= 0)
            return -1;
        p += k;
        n -= (size_t)k;
    }
    return 0;
}

int main(int argc, char **argv)
{
    struct sockaddr_in dst;
    long total, chunk, done = 0;
    uint64_t out_sum = FNV64_OFFSET, in_sum = FNV64_OFFSET;
    uint32_t state = 0x12345678u;
    unsigned char *txbuf, *rxbuf;
    int fd;
    long i;

    if (argc != 5) {
        fprintf(stderr, "usage: %s HOST PORT TOTAL CHUNK\n", argv[0]);
        return 2;
    }
    total = atol(argv[3]);
    chunk = atol(argv[4]);
    if (chunk <= 0 || total <= 0 || total % chunk != 0) {
        fprintf(stderr, "TOTAL must be a positive multiple of CHUNK\n");
        return 2;
    }
    txbuf = malloc((size_t)chunk);
    rxbuf = malloc((size_t)chunk);
    if (!txbuf || !rxbuf)
        return 2;

    memset(&dst, 0, sizeof dst);
    dst.sin_family = AF_INET;
    dst.sin_port = htons((unsigned short)atoi(argv[2]));
    if (inet_pton(AF_INET, argv[1], &dst.sin_addr) != 1)
        return 2;
    fd = socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0 || connect(fd, (struct sockaddr *)&dst, sizeof dst)) {
        perror("connect");
        return 1;
    }

    while (done < total) {
        for (i = 0; i < chunk; i++) {
            state = state * 1664525u + 1013904223u; /* LCG, fixed seed */
            txbuf[i] = (unsigned char)(state >> 24);
        }
        if (send_all(fd, txbuf, (size_t)chunk)) {
            perror("send");
            return 1;
        }
        out_sum = fnv64(out_sum, txbuf, (size_t)chunk);
        if (recv_all(fd, rxbuf, (size_t)chunk)) {
            perror("recv");
            return 1;
        }
        in_sum = fnv64(in_sum, rxbuf, (size_t)chunk);
        done += chunk;
    }
    close(fd);
    printf("bytes=%ld out=%016llx in=%016llx match=%d\n", done,
           (unsigned long long)out_sum, (unsigned long long)in_sum,
           out_sum == in_sum);
    return out_sum == in_sum ? 0 : 1;
}
