#pragma kernel jacobi1d params(T=3, N=8)
long A[N];
long B[N];

for (int t = 0; t < T; t++) {
  for (int i = 1; i < N - 1; i++)
    // comp_ID: comp00
    B[i] = A[i - 1] + A[i] + A[i + 1];
  for (int i = 1; i < N - 1; i++)
    // comp_ID: comp01
    A[i] = B[i - 1] + B[i] + B[i + 1];
}
