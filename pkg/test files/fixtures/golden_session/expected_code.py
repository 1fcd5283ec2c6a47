n = int(input())
s = input()
a = []
b = []
for i in s:
    if i == '(':
        a.append(i)
    elif a:
        a.pop()
    else:
        b.append(i)
print('(' * len(b) + s + ')' * len(a))
