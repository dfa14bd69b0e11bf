package demo.math;

import java.util.List;

public class Calculator {
    private final List<Integer> history;

    public Calculator(List<Integer> history) {
        this.history = history;
    }

    public int add(int a, int b) {
        int sum = a + b;
        history.add(sum);
        return sum;
    }

    public int subtract(int a, int b) {
        int diff = a - b;
        history.add(diff);
        return diff;
    }

	public int last() {
		return history.get(history.size() - 1);
	}

    public void clear() { history.clear(); }
    // TODO: multiply
}
